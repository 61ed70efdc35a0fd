//! Dense-matrix oracles for small qubit counts.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use qwoa::liealg::{AlgebraElement, PauliString};
use qwoa::simulator::{CircuitSpec, Generator, ParameterSet, Statevector};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(a)` by scaling and squaring a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let dim = a.nrows();
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a.map(|z| z / 2f64.powi(s));
    let mut out = CMat::identity(dim, dim);
    let mut term = CMat::identity(dim, dim);
    for k in 1..40 {
        term = &term * &scaled / Complex64::from(k as f64);
        out += &term;
    }
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

pub fn pauli(p: &PauliString) -> CMat {
    let dim = 1usize << p.n();
    let mut m = CMat::zeros(dim, dim);
    for x in 0..dim as u64 {
        let mut phase = Complex64::new(1.0, 0.0);
        for q in 0..p.n() {
            let bx = (p.x_mask() >> q) & 1;
            let bz = (p.z_mask() >> q) & 1;
            let bit = (x >> q) & 1;
            let sign = if bit == 1 { -1.0 } else { 1.0 };
            match (bx, bz) {
                (0, 1) => phase *= sign,
                (1, 1) => phase *= I * sign,
                _ => {}
            }
        }
        m[((x ^ p.x_mask()) as usize, x as usize)] = phase;
    }
    m
}

pub fn element(e: &AlgebraElement) -> CMat {
    let dim = 1usize << e.n();
    let mut m = CMat::zeros(dim, dim);
    for (p, c) in e.terms() {
        m += pauli(p) * Complex64::from(*c);
    }
    m
}

pub fn mixer(n: usize) -> CMat {
    let dim = 1usize << n;
    CMat::from_fn(dim, dim, |r, c| if (r ^ c).count_ones() == 1 { Complex64::from(1.0) } else { Complex64::from(0.0) })
}

pub fn diagonal(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|v| Complex64::from(*v))))
}

pub fn uniform(n: usize) -> CVec {
    let dim = 1usize << n;
    CVec::from_element(dim, Complex64::from(1.0 / (dim as f64).sqrt()))
}

/// Final state of `circuit`, gate by gate, with each gate a dense exponential.
pub fn run_dense(circuit: &CircuitSpec, params: &ParameterSet) -> CVec {
    let n = circuit.n();
    let m = mixer(n);
    let phases: Vec<CMat> = circuit.phase_tables().iter().map(|t| diagonal(t.values())).collect();
    let mut psi = uniform(n);
    for gate in circuit.gates() {
        let h = match gate.generator {
            Generator::Phase(i) => &phases[i],
            Generator::Mixer => &m,
        };
        let u = expm(&(h * (-I * params.values()[gate.param])));
        psi = u * psi;
    }
    psi
}

pub fn max_diff(a: &Statevector, b: &CVec) -> f64 {
    a.amps().iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn dense_expectation(psi: &CVec, op: &CMat) -> f64 {
    (psi.adjoint() * op * psi)[(0, 0)].re
}

/// Central differences of `f` at `x`.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    diff / scale
}
