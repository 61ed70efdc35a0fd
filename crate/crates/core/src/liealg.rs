//! Sparse Pauli algebra, dynamical Lie algebra closure and Lie-algebraic
//! (g-sim) simulation.
//!
//! Hermitian operators are stored as real combinations of Pauli strings; the
//! corresponding element of the Lie algebra is `i` times that combination.
//! Nothing in this module builds dense `2^n × 2^n` matrices.
//!
//! Bases are orthonormal under `Tr(A B)`. Internally each basis element is
//! kept as a unit vector `u` in Pauli-coefficient space, with
//! `B = u / √(2^n)`.
//!
//! Structure constants follow `f^γ_{αβ} = Tr(iB_γ [iB_α, iB_β])`, so
//! `[iB_α, iB_β] = −Σ_γ f^γ_{αβ} iB_γ`. For a Hermitian `h = Σ_γ w_γ B_γ` the
//! adjoint matrix is `Φ(h)_{αβ} = Σ_γ w_γ f^γ_{αβ}`, and the gate
//! `U = exp(−iθh)` acts as `U† B_α U = Σ_γ R_{αγ} B_γ` with `R = exp(−θ Φ(h))`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exec::Exec;
use crate::graphs::QualityTable;
use crate::simulator::{CircuitSpec, Generator, ParameterSet};

const CLOSURE_TOL: f64 = 1e-10;
const PRUNE_REL: f64 = 1e-14;
const PROJECTION_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum LieError {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("Pauli strings support at most 64 qubits, got {0}")]
    TooManyQubits(usize),
    #[error("invalid Pauli letter {0:?}")]
    BadLetter(char),
    #[error("closure needs at least one nonzero generator")]
    NoGenerators,
    #[error("algebra dimension exceeds cap {max} (reached {partial})")]
    DimensionCapExceeded { partial: usize, max: usize },
    #[error("operator not in the algebra (relative residual {0:.3e})")]
    NotInAlgebra(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, LieError>;

/// Tensor product of single-qubit Paulis, encoded as X and Z bit masks
/// (`Y` sets both bits). Qubit `q` is bit `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u32,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, 0, 0)
    }

    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > 64 {
            return Err(LieError::TooManyQubits(n));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Ok(PauliString { n: n as u32, x: x & mask, z: z & mask })
    }

    /// Parses letters `I X Y Z`; character `q` acts on qubit `q`.
    pub fn from_letters(s: &str) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        let mut n = 0;
        for (q, c) in s.chars().enumerate() {
            let (bx, bz) = match c {
                'I' => (0, 0),
                'X' => (1, 0),
                'Y' => (1, 1),
                'Z' => (0, 1),
                other => return Err(LieError::BadLetter(other)),
            };
            x |= bx << q;
            z |= bz << q;
            n += 1;
        }
        Self::new(n, x, z)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// `self · other = i^k · result`, returned as `(k mod 4, result)`.
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let ys = x1 & z1;
        let xs = x1 & !z1;
        let zs = z1 & !x1;
        // Per-qubit exponent of i: Y·Z = iX, Y·X = −iZ, X·Z = −iY, X·Y = iZ, Z·X = iY, Z·Y = −iX.
        let plus = (ys & z2 & !x2) | (xs & z2 & x2) | (zs & x2 & !z2);
        let minus = (ys & x2 & !z2) | (xs & z2 & !x2) | (zs & x2 & z2);
        let k = (plus.count_ones() as i64 - minus.count_ones() as i64).rem_euclid(4) as u8;
        (k, PauliString { n: self.n, x: x1 ^ x2, z: z1 ^ z2 })
    }

    /// `⟨s|P|s⟩` on the uniform superposition: 1 for strings of `I`/`X` only.
    pub fn uniform_expectation(&self) -> f64 {
        if self.z == 0 {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let c = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Real combination of Pauli strings (a Hermitian operator).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        AlgebraElement { n, terms: BTreeMap::new() }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (PauliString, f64)>) -> Result<Self> {
        let mut e = Self::zero(n);
        for (p, c) in terms {
            if p.n() != n {
                return Err(LieError::SizeMismatch(n, p.n()));
            }
            e.add_term(p, c);
        }
        Ok(e)
    }

    /// Parses `[(coefficient, "XZI"), ...]`.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let n = terms.first().map_or(0, |(_, s)| s.len());
        let parsed = terms
            .iter()
            .map(|(c, s)| PauliString::from_letters(s).map(|p| (p, *c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, parsed)
    }

    /// Binary mixer `Σ_j X_j`.
    pub fn binary_mixer(n: usize) -> Result<Self> {
        let terms = (0..n).map(|q| PauliString::new(n, 1 << q, 0)).collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, terms.into_iter().map(|p| (p, 1.0)))
    }

    /// Pauli-Z expansion of a diagonal operator via a Walsh–Hadamard
    /// transform; coefficients below `1e-12 · max` are dropped.
    pub fn from_diagonal(table: &QualityTable) -> Result<Self> {
        let n = table.n();
        let mut c = table.values().to_vec();
        let mut h = 1;
        while h < c.len() {
            for block in c.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = u + v;
                    *b = u - v;
                }
            }
            h *= 2;
        }
        let norm = c.len() as f64;
        let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut e = Self::zero(n);
        for (s, v) in c.into_iter().enumerate() {
            if v.abs() > 1e-12 * max {
                e.terms.insert(PauliString::new(n, 0, s as u64)?, v / norm);
            }
        }
        Ok(e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, p: PauliString, c: f64) {
        let entry = self.terms.entry(p).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&p);
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &AlgebraElement) {
        for (p, c) in &other.terms {
            self.add_term(*p, a * c);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        AlgebraElement { n: self.n, terms: self.terms.iter().map(|(p, c)| (*p, a * c)).collect() }
    }

    /// Coefficient-space inner product `Σ_P a_P b_P` (equals `Tr(AB) / 2^n`).
    pub fn dot(&self, other: &AlgebraElement) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.terms.iter().map(|(p, c)| c * large.coefficient(p)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `Tr(A B)`.
    pub fn trace_inner(&self, other: &AlgebraElement) -> f64 {
        (self.n as f64).exp2() * self.dot(other)
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.terms.iter().find(|(p, _)| p.is_identity()).map_or(0.0, |(_, c)| *c)
    }

    /// Removes the identity component.
    pub fn traceless(&self) -> Self {
        AlgebraElement { n: self.n, terms: self.terms.iter().filter(|(p, _)| !p.is_identity()).map(|(p, c)| (*p, *c)).collect() }
    }

    fn prune(&mut self) {
        let max = self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        self.terms.retain(|_, c| c.abs() > PRUNE_REL * max);
    }
}

/// Returns `c` with `ic = [ia, ib]`.
pub fn commutator(a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
    if a.n != b.n {
        return Err(LieError::SizeMismatch(a.n, b.n));
    }
    let mut out = AlgebraElement::zero(a.n);
    for (p, ca) in &a.terms {
        for (q, cb) in &b.terms {
            if p.commutes_with(q) {
                continue;
            }
            // PQ − QP = 2PQ = 2 i^k R with k odd; [iA, iB] = −[A, B].
            let (k, r) = p.mul(q);
            let c = if k == 1 { -2.0 * ca * cb } else { 2.0 * ca * cb };
            *out.terms.entry(r).or_insert(0.0) += c;
        }
    }
    let l1 = |e: &AlgebraElement| e.terms.values().map(|c| c.abs()).sum::<f64>();
    let floor = PRUNE_REL * 2.0 * l1(a) * l1(b);
    out.terms.retain(|_, c| c.abs() > floor);
    Ok(out)
}

/// Orthonormal basis (under `Tr(AB)`) of a dynamical Lie algebra.
#[derive(Clone, Debug)]
pub struct DlaBasis {
    n: usize,
    units: Vec<AlgebraElement>,
    round_sizes: Vec<usize>,
}

impl DlaBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.units.len()
    }

    /// Basis size after seeding with the generators (entry 0) and after each
    /// commutator round.
    pub fn round_sizes(&self) -> &[usize] {
        &self.round_sizes
    }

    fn scale(&self) -> f64 {
        (self.n as f64).exp2().sqrt()
    }

    /// `B_α`, normalized so that `Tr(B_α B_β) = δ_αβ`.
    pub fn element(&self, alpha: usize) -> AlgebraElement {
        self.units[alpha].scaled(1.0 / self.scale())
    }

    /// Coordinates `w_α = Tr(B_α h)` of the traceless part of `h`, plus the
    /// identity coefficient. Fails if the traceless part leaves the span.
    pub fn project(&self, h: &AlgebraElement) -> Result<(f64, Vec<f64>)> {
        if h.n != self.n {
            return Err(LieError::SizeMismatch(self.n, h.n));
        }
        let body = h.traceless();
        let coords: Vec<f64> = self.units.iter().map(|u| u.dot(&body)).collect();
        let mut residual = body.clone();
        for (u, c) in self.units.iter().zip(&coords) {
            residual.axpy(-c, u);
        }
        let scale = body.norm().max(f64::MIN_POSITIVE);
        let rel = residual.norm() / scale;
        if body.norm() > 0.0 && rel > PROJECTION_TOL {
            return Err(LieError::NotInAlgebra(rel));
        }
        let s = self.scale();
        Ok((h.identity_coefficient(), coords.into_iter().map(|c| c * s).collect()))
    }

    /// `Tr(B_γ ρ₀)` for `ρ₀ = |s⟩⟨s|`, the uniform superposition.
    pub fn uniform_initial_expectations(&self) -> Vec<f64> {
        let s = self.scale();
        self.units
            .iter()
            .map(|u| u.terms().map(|(p, c)| c * p.uniform_expectation()).sum::<f64>() / s)
            .collect()
    }

    /// Gram–Schmidt step with one re-orthogonalization pass; returns the new
    /// unit vector if `v` has a component outside the current span larger
    /// than `CLOSURE_TOL · scale`.
    fn orthogonalize(&self, v: &AlgebraElement, scale: f64) -> Option<AlgebraElement> {
        let start = v.norm();
        if start <= CLOSURE_TOL * scale {
            return None;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for u in &self.units {
                let c = u.dot(&r);
                if c != 0.0 {
                    r.axpy(-c, u);
                }
            }
        }
        let rest = r.norm();
        if rest <= CLOSURE_TOL * scale.max(start) {
            return None;
        }
        r.prune();
        let norm = r.norm();
        Some(r.scaled(1.0 / norm))
    }
}

/// Commutator closure of `generators` (identity parts dropped).
pub fn lie_closure(generators: &[AlgebraElement], max_dim: usize) -> Result<DlaBasis> {
    let n = generators.first().ok_or(LieError::NoGenerators)?.n;
    let mut basis = DlaBasis { n, units: Vec::new(), round_sizes: Vec::new() };
    for g in generators {
        if g.n != n {
            return Err(LieError::SizeMismatch(n, g.n));
        }
        let g = g.traceless();
        if let Some(u) = basis.orthogonalize(&g, g.norm()) {
            if basis.units.len() == max_dim {
                return Err(LieError::DimensionCapExceeded { partial: basis.units.len(), max: max_dim });
            }
            basis.units.push(u);
        }
    }
    if basis.units.is_empty() {
        return Err(LieError::NoGenerators);
    }
    basis.round_sizes.push(basis.units.len());
    let mut frontier = 0..basis.units.len();
    while !frontier.is_empty() {
        let start = basis.units.len();
        for i in frontier.clone() {
            for j in 0..start {
                if i == j {
                    continue;
                }
                // Inputs are unit vectors, so the tolerance is absolute.
                let c = commutator(&basis.units[i], &basis.units[j])?;
                if let Some(u) = basis.orthogonalize(&c, 1.0) {
                    if basis.units.len() == max_dim {
                        return Err(LieError::DimensionCapExceeded { partial: basis.units.len(), max: max_dim });
                    }
                    basis.units.push(u);
                }
            }
        }
        frontier = start..basis.units.len();
        if !frontier.is_empty() {
            basis.round_sizes.push(basis.units.len());
        }
    }
    Ok(basis)
}

/// QWOA generators for a quality table: the traceless phase operator and the
/// binary mixer.
pub fn qwoa_generators(table: &QualityTable) -> Result<Vec<AlgebraElement>> {
    Ok(vec![AlgebraElement::from_diagonal(table)?.traceless(), AlgebraElement::binary_mixer(table.n())?])
}

/// Dense `f[γ][α][β]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.data[(gamma * self.dim + alpha) * self.dim + beta]
    }

    /// The slice `f[γ]` as a matrix indexed `[α][β]`.
    pub fn slice(&self, gamma: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |a, b| self.get(gamma, a, b))
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for g in 0..d {
            for a in 0..d {
                for b in 0..d {
                    worst = worst.max((self.get(g, a, b) + self.get(g, b, a)).abs());
                }
            }
        }
        worst
    }

    /// Max over `(α, β, γ, ε)` of the Jacobi-identity sum
    /// `Σ_δ f^δ_{αβ} f^ε_{δγ} + f^δ_{βγ} f^ε_{δα} + f^δ_{γα} f^ε_{δβ}`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let s: f64 = (0..d)
                            .map(|k| {
                                self.get(k, a, b) * self.get(e, k, c)
                                    + self.get(k, b, c) * self.get(e, k, a)
                                    + self.get(k, c, a) * self.get(e, k, b)
                            })
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

pub fn structure_constants(basis: &DlaBasis) -> StructureConstants {
    structure_constants_with(basis, Exec::default())
}

/// Computes `f` pairwise from sparse commutators; rows `α` run in parallel.
pub fn structure_constants_with(basis: &DlaBasis, exec: Exec) -> StructureConstants {
    let d = basis.dim();
    let scale = basis.scale();
    let rows: Vec<Vec<(usize, Vec<f64>)>> = exec.map_range(d, |a| {
        (a + 1..d)
            .map(|b| {
                let c = commutator(&basis.units[a], &basis.units[b]).expect("same n");
                // f = −Tr(B_γ C) with B = u/√N and C = c/N.
                let col = basis.units.iter().map(|u| -u.dot(&c) / scale).collect();
                (b, col)
            })
            .collect()
    });
    let mut data = vec![0.0; d * d * d];
    for (a, row) in rows.into_iter().enumerate() {
        for (b, col) in row {
            for (g, v) in col.into_iter().enumerate() {
                data[(g * d + a) * d + b] = v;
                data[(g * d + b) * d + a] = -v;
            }
        }
    }
    StructureConstants { dim: d, data }
}

/// `Φ(h)_{αβ} = Σ_γ w_γ f^γ_{αβ}`; the identity part of `h` is ignored.
pub fn adjoint_of_hamiltonian(h: &AlgebraElement, basis: &DlaBasis, f: &StructureConstants) -> Result<DMatrix<f64>> {
    if f.dim != basis.dim() {
        return Err(LieError::DimensionMismatch { expected: basis.dim(), got: f.dim });
    }
    let (_, w) = basis.project(h)?;
    let d = f.dim;
    let mut m = DMatrix::zeros(d, d);
    for (g, wg) in w.iter().enumerate() {
        if *wg == 0.0 {
            continue;
        }
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] += wg * f.get(g, a, b);
            }
        }
    }
    Ok(m)
}

/// `R` with `U† B_α U = Σ_γ R_{αγ} B_γ` for `U = exp(−i·angle·h)`.
pub fn adjoint_of_unitary(h: &AlgebraElement, angle: f64, basis: &DlaBasis, f: &StructureConstants) -> Result<DMatrix<f64>> {
    Ok(expm(&(adjoint_of_hamiltonian(h, basis, f)? * -angle)))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let norm1 = (0..dim).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);
    let mut result = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Lie-algebraic simulator for a fixed circuit: adjoint matrices of every
/// generator are computed once, each evaluation then costs one `dim × dim`
/// exponential and one mat-vec per gate.
pub struct GSim<'a> {
    circuit: &'a CircuitSpec,
    basis: &'a DlaBasis,
    phase_adjoints: Vec<DMatrix<f64>>,
    mixer_adjoint: DMatrix<f64>,
}

impl<'a> GSim<'a> {
    pub fn new(circuit: &'a CircuitSpec, basis: &'a DlaBasis, f: &StructureConstants) -> Result<Self> {
        if circuit.n() != basis.n() {
            return Err(LieError::SizeMismatch(basis.n(), circuit.n()));
        }
        let phase_adjoints = circuit
            .phase_tables()
            .iter()
            .map(|t| adjoint_of_hamiltonian(&AlgebraElement::from_diagonal(t)?, basis, f))
            .collect::<Result<Vec<_>>>()?;
        let mixer_adjoint = adjoint_of_hamiltonian(&AlgebraElement::binary_mixer(circuit.n())?, basis, f)?;
        Ok(GSim { circuit, basis, phase_adjoints, mixer_adjoint })
    }

    /// `Σ_α Σ_γ w_α R_{αγ} e_γ` plus the observable's identity part.
    pub fn expectation(&self, params: &ParameterSet, observable: &AlgebraElement, initial_e: &[f64]) -> Result<f64> {
        let d = self.basis.dim();
        if initial_e.len() != d {
            return Err(LieError::DimensionMismatch { expected: d, got: initial_e.len() });
        }
        if params.len() != self.circuit.num_params() {
            return Err(LieError::DimensionMismatch { expected: self.circuit.num_params(), got: params.len() });
        }
        let (offset, w) = self.basis.project(observable)?;
        let mut w = DVector::from_vec(w);
        // Heisenberg picture: last gate first, w ← Rᵀ w = exp(θ Φ) w.
        for gate in self.circuit.gates().iter().rev() {
            let theta = params.values()[gate.param];
            if theta == 0.0 {
                continue;
            }
            let adj = match gate.generator {
                Generator::Phase(t) => &self.phase_adjoints[t],
                Generator::Mixer => &self.mixer_adjoint,
            };
            w = expm(&(adj * theta)) * w;
        }
        Ok(offset + w.iter().zip(initial_e).map(|(a, b)| a * b).sum::<f64>())
    }
}

pub fn gsim_expectation(
    circuit: &CircuitSpec,
    params: &ParameterSet,
    observable: &AlgebraElement,
    basis: &DlaBasis,
    f: &StructureConstants,
    initial_e: &[f64],
) -> Result<f64> {
    GSim::new(circuit, basis, f)?.expectation(params, observable, initial_e)
}
