//! Statevector evolution of QWOA circuits with the binary (hypercube) mixer.
//!
//! A circuit is an ordered gate list; each gate is `exp(-i θ H)` with `H`
//! either a diagonal quality operator or `M = Σ_j X_j`, and `θ` read from a
//! parameter slot. Gradients use the adjoint method: one forward sweep, one
//! application of the observable, then a backward sweep that un-applies each
//! gate from the state and the costate in lockstep.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::QualityTable;
use crate::DEFAULT_MAX_QUBITS;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("qubit count {n} outside 1..={max}")]
    SizeLimit { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("circuit takes {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Computational basis state `|x⟩`.
    pub fn basis(n: usize, x: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[x] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(SimError::InvalidCircuit(format!("{} amplitudes for {n} qubits", amps.len())));
        }
        Ok(Statevector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > DEFAULT_MAX_QUBITS {
        return Err(SimError::SizeLimit { n, max: DEFAULT_MAX_QUBITS });
    }
    Ok(())
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(SimError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Equal superposition over all `2^n` bitstrings.
pub fn uniform_state(n: usize) -> Result<Statevector> {
    check_qubits(n)?;
    let a = (1u64 << n) as f64;
    Ok(Statevector { n, amps: vec![Complex64::new(a.sqrt().recip(), 0.0); 1 << n] })
}

/// `amps[x] *= exp(-i angle values[x])`.
pub fn apply_phase(state: &mut Statevector, table: &QualityTable, angle: f64) -> Result<()> {
    check_dims(state.n, table.n())?;
    phase_kernel(&mut state.amps, table.values(), angle);
    Ok(())
}

#[inline]
fn phase_kernel(amps: &mut [Complex64], values: &[f64], angle: f64) {
    if angle == 0.0 {
        return;
    }
    for (a, &q) in amps.iter_mut().zip(values) {
        let (s, c) = (angle * q).sin_cos();
        *a *= Complex64::new(c, -s);
    }
}

/// `exp(-i angle Σ_j X_j)` as `n` commuting single-qubit rotations.
pub fn apply_mixer(state: &mut Statevector, angle: f64) {
    mixer_kernel(&mut state.amps, state.n, angle);
}

#[inline]
fn mixer_kernel(amps: &mut [Complex64], n: usize, angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (s, c) = angle.sin_cos();
    for j in 0..n {
        let stride = 1usize << j;
        for block in amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                // c·x − i s·y, −i s·x + c·y
                *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
            }
        }
    }
}

/// `⟨ψ|Q|ψ⟩ = Σ_x q(x) |ψ_x|²`.
pub fn expectation(state: &Statevector, table: &QualityTable) -> Result<f64> {
    check_dims(state.n, table.n())?;
    Ok(state.amps.iter().zip(table.values()).map(|(a, q)| q * a.norm_sqr()).sum())
}

/// Generator of one gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// Diagonal quality operator, indexing `CircuitSpec::phase_tables`.
    Phase(usize),
    /// Binary mixer `Σ_j X_j`.
    Mixer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub generator: Generator,
    pub param: usize,
}

/// Ordered gate list; gates are applied first to last.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    n: usize,
    depth: usize,
    phase_tables: Vec<Arc<QualityTable>>,
    gates: Vec<Gate>,
    num_params: usize,
}

impl CircuitSpec {
    pub fn new(depth: usize, phase_tables: Vec<Arc<QualityTable>>, gates: Vec<Gate>) -> Result<Self> {
        let n = phase_tables
            .first()
            .map(|t| t.n())
            .ok_or_else(|| SimError::InvalidCircuit("no phase tables".into()))?;
        for t in &phase_tables {
            check_dims(n, t.n())?;
        }
        let mut used = Vec::new();
        for g in &gates {
            if let Generator::Phase(i) = g.generator {
                if i >= phase_tables.len() {
                    return Err(SimError::InvalidCircuit(format!("phase table {i} does not exist")));
                }
            }
            if g.param >= used.len() {
                used.resize(g.param + 1, false);
            }
            used[g.param] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(SimError::InvalidCircuit(format!("parameter {missing} is never used")));
        }
        Ok(CircuitSpec { n, depth, phase_tables, gates, num_params: used.len() })
    }

    /// Standard QWOA: `p` layers of `exp(-i θ_2k Q)` then `exp(-i θ_2k+1 M)`.
    pub fn qwoa(table: Arc<QualityTable>, p: usize) -> Self {
        let gates = (0..p)
            .flat_map(|k| {
                [
                    Gate { generator: Generator::Phase(0), param: 2 * k },
                    Gate { generator: Generator::Mixer, param: 2 * k + 1 },
                ]
            })
            .collect();
        CircuitSpec::new(p, vec![table], gates).expect("qwoa layout is valid")
    }

    /// Pretrained-QWOA layers: target phase (`θ_3k`), auxiliary phase
    /// (`θ_3k+1`), then mixer (`θ_3k+2`).
    pub fn augmented(target: Arc<QualityTable>, aux: Arc<QualityTable>, p: usize) -> Result<Self> {
        let gates = (0..p)
            .flat_map(|k| {
                [
                    Gate { generator: Generator::Phase(0), param: 3 * k },
                    Gate { generator: Generator::Phase(1), param: 3 * k + 1 },
                    Gate { generator: Generator::Mixer, param: 3 * k + 2 },
                ]
            })
            .collect();
        CircuitSpec::new(p, vec![target, aux], gates)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn phase_tables(&self) -> &[Arc<QualityTable>] {
        &self.phase_tables
    }

    fn check_params(&self, params: &ParameterSet) -> Result<()> {
        if params.len() != self.num_params {
            return Err(SimError::ParamCount { expected: self.num_params, got: params.len() });
        }
        Ok(())
    }

    #[inline]
    fn apply_gate(&self, amps: &mut [Complex64], gate: &Gate, angle: f64) {
        match gate.generator {
            Generator::Phase(t) => phase_kernel(amps, self.phase_tables[t].values(), angle),
            Generator::Mixer => mixer_kernel(amps, self.n, angle),
        }
    }
}

/// Flat parameter vector, indexed by `Gate::param`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSet(pub Vec<f64>);

impl ParameterSet {
    pub fn zeros(len: usize) -> Self {
        ParameterSet(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.0.iter().all(|v| (lo..=hi).contains(v))
    }
}

impl From<Vec<f64>> for ParameterSet {
    fn from(v: Vec<f64>) -> Self {
        ParameterSet(v)
    }
}

/// `U(θ)|s⟩` with `|s⟩` the uniform superposition.
pub fn run_pqc(circuit: &CircuitSpec, params: &ParameterSet) -> Result<Statevector> {
    circuit.check_params(params)?;
    let mut state = uniform_state(circuit.n)?;
    for gate in &circuit.gates {
        circuit.apply_gate(&mut state.amps, gate, params.0[gate.param]);
    }
    Ok(state)
}

/// `⟨λ|H|φ⟩` for a single generator.
fn generator_matrix_element(circuit: &CircuitSpec, gen: Generator, lambda: &[Complex64], phi: &[Complex64]) -> Complex64 {
    match gen {
        Generator::Phase(t) => lambda
            .iter()
            .zip(phi)
            .zip(circuit.phase_tables[t].values())
            .map(|((l, p), &q)| l.conj() * p * q)
            .sum(),
        Generator::Mixer => {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..circuit.n {
                let bit = 1usize << j;
                for (x, l) in lambda.iter().enumerate() {
                    acc += l.conj() * phi[x ^ bit];
                }
            }
            acc
        }
    }
}

/// Returns `(⟨Q⟩, ∂⟨Q⟩/∂θ)` for the circuit output measured with `observable`.
///
/// With `φ_k` the state after gate `k` and `λ_k = G_{k+1}† … G_L† Q U|s⟩`,
/// each gate contributes `2 Im ⟨λ_k|H_k|φ_k⟩` to its parameter's slot.
pub fn gradient_adjoint(
    circuit: &CircuitSpec,
    params: &ParameterSet,
    observable: &QualityTable,
) -> Result<(f64, Vec<f64>)> {
    check_dims(circuit.n, observable.n())?;
    let mut phi = run_pqc(circuit, params)?;
    let mut lambda = phi.amps.clone();
    for (l, &q) in lambda.iter_mut().zip(observable.values()) {
        *l *= q;
    }
    let value: f64 = phi.amps.iter().zip(&lambda).map(|(p, l)| (p.conj() * l).re).sum();

    let mut grad = vec![0.0; circuit.num_params];
    for gate in circuit.gates.iter().rev() {
        let angle = params.0[gate.param];
        grad[gate.param] += 2.0 * generator_matrix_element(circuit, gate.generator, &lambda, &phi.amps).im;
        circuit.apply_gate(&mut phi.amps, gate, -angle);
        circuit.apply_gate(&mut lambda, gate, -angle);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Graph;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn edge_table() -> Arc<QualityTable> {
        Arc::new(QualityTable::build(&Graph::from_edges(2, [(0, 1)]).unwrap()).unwrap())
    }

    #[test]
    fn uniform_examples() {
        let s = uniform_state(1).unwrap();
        assert!(s.amps().iter().all(|a| close(*a, Complex64::new(FRAC_1_SQRT_2, 0.0))));
        let s = uniform_state(2).unwrap();
        assert!(s.amps().iter().all(|a| close(*a, Complex64::new(0.5, 0.0))));
        let s = uniform_state(16).unwrap();
        assert_eq!(s.amps().len(), 65536);
        assert!(s.amps().iter().all(|a| *a == Complex64::new(1.0 / 256.0, 0.0)));
        assert!(uniform_state(0).is_err());
        assert!(uniform_state(25).is_err());
    }

    #[test]
    fn phase_examples() {
        let t = edge_table();
        let mut s = uniform_state(2).unwrap();
        apply_phase(&mut s, &t, 0.0).unwrap();
        assert_eq!(s, uniform_state(2).unwrap());

        apply_phase(&mut s, &t, PI).unwrap();
        let want = [0.5, -0.5, -0.5, 0.5];
        for (a, w) in s.amps().iter().zip(want) {
            assert!(close(*a, Complex64::new(w, 0.0)));
        }

        let empty = QualityTable::build(&Graph::new(2).unwrap()).unwrap();
        let mut s = uniform_state(2).unwrap();
        apply_phase(&mut s, &empty, 1.3).unwrap();
        assert_eq!(s, uniform_state(2).unwrap());

        let mut s3 = uniform_state(3).unwrap();
        assert_eq!(apply_phase(&mut s3, &t, 1.0), Err(SimError::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn mixer_examples() {
        let mut s = Statevector::basis(1, 0).unwrap();
        apply_mixer(&mut s, 0.0);
        assert_eq!(s, Statevector::basis(1, 0).unwrap());
        apply_mixer(&mut s, FRAC_PI_2);
        assert!(close(s.amps()[0], Complex64::new(0.0, 0.0)));
        assert!(close(s.amps()[1], Complex64::new(0.0, -1.0)));

        let mut s = Statevector::basis(2, 0).unwrap();
        apply_mixer(&mut s, FRAC_PI_4);
        let want = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.0, -0.5),
            Complex64::new(-0.5, 0.0),
        ];
        for (a, w) in s.amps().iter().zip(want) {
            assert!(close(*a, w), "{a} vs {w}");
        }
    }

    #[test]
    fn expectation_examples() {
        let t = edge_table();
        assert_eq!(expectation(&uniform_state(2).unwrap(), &t).unwrap(), t.mu());
        assert_eq!(expectation(&Statevector::basis(2, 1).unwrap(), &t).unwrap(), 1.0);
        let p4 = QualityTable::build(&Graph::path(4).unwrap()).unwrap();
        // 0101 read with vertex 0 in bit 0 is index 0b1010.
        assert_eq!(expectation(&Statevector::basis(4, 0b1010).unwrap(), &p4).unwrap(), 3.0);
    }

    #[test]
    fn run_pqc_trivial_points() {
        let table = Arc::new(QualityTable::build(&Graph::cycle(4).unwrap()).unwrap());
        let c = CircuitSpec::qwoa(table.clone(), 3);
        let s = run_pqc(&c, &ParameterSet::zeros(6)).unwrap();
        assert_eq!(s, uniform_state(4).unwrap());

        let s = run_pqc(&CircuitSpec::qwoa(table, 1), &ParameterSet(vec![0.9, 0.0])).unwrap();
        for p in s.probabilities() {
            assert!((p - 1.0 / 16.0).abs() < 1e-15);
        }
        assert_eq!(
            run_pqc(&c, &ParameterSet::zeros(5)).unwrap_err(),
            SimError::ParamCount { expected: 6, got: 5 }
        );
    }

    #[test]
    fn phase_only_circuit_has_zero_phase_gradient() {
        let table = Arc::new(QualityTable::build(&Graph::cycle(4).unwrap()).unwrap());
        let c = CircuitSpec::qwoa(table.clone(), 3);
        let params = ParameterSet(vec![0.3, 0.0, 1.1, 0.0, 2.0, 0.0]);
        let (value, grad) = gradient_adjoint(&c, &params, &table).unwrap();
        assert!((value - table.mu()).abs() < 1e-12);
        for k in [0, 2, 4] {
            assert!(grad[k].abs() < 1e-12);
        }
    }

    #[test]
    fn circuit_validation() {
        let t = edge_table();
        let gap = vec![Gate { generator: Generator::Mixer, param: 1 }];
        assert!(CircuitSpec::new(1, vec![t.clone()], gap).is_err());
        let bad_table = vec![Gate { generator: Generator::Phase(3), param: 0 }];
        assert!(CircuitSpec::new(1, vec![t.clone()], bad_table).is_err());
        let other = Arc::new(QualityTable::build(&Graph::path(3).unwrap()).unwrap());
        assert!(CircuitSpec::augmented(t, other, 2).is_err());
    }
}
