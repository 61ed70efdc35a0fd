//! Deterministic random streams.
//!
//! Every random quantity in the crate comes from a [`ChaCha8Rng`] (a
//! counter-based stream cipher generator with a portable, platform
//! independent output sequence). Streams are keyed by a master seed plus a
//! purpose label and a list of integer coordinates (class index, instance
//! index, ...), mixed with SplitMix64. Two streams with different labels or
//! coordinates are statistically independent; identical inputs always
//! reproduce the identical stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// One SplitMix64 output step.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a, 64 bit.
fn hash_label(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives a 64-bit child seed from `master`, a purpose label and coordinates.
pub fn derive_seed(master: u64, label: &str, coords: &[u64]) -> u64 {
    let mut state = master ^ hash_label(label);
    let mut out = splitmix64(&mut state);
    for &c in coords {
        state ^= c.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        out = splitmix64(&mut state) ^ out.rotate_left(17);
    }
    out
}

/// Opens the stream for `(master, label, coords)`.
pub fn stream(master: u64, label: &str, coords: &[u64]) -> Stream {
    let mut state = derive_seed(master, label, coords);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
