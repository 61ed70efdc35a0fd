//! QWOA for MaxCut: statevector simulation with adjoint gradients, the
//! random / Lie-algebraic-pretrained / non-variational (NV) initialization
//! strategies, a bounded L-BFGS trainer, a Lie-algebraic (g-sim) simulator
//! used as a cross-check, and the benchmark harness that ties them together.
//!
//! Data-parallel loops (quality tables, brute-force scans, structure
//! constants, benchmark suites) run on rayon when the `parallel` feature is
//! enabled (the default) and fall back to plain loops otherwise. See
//! [`exec::Exec`].

pub mod bench;
pub mod exec;
pub mod graphs;
pub mod liealg;
pub mod optimize;
pub mod rng;
pub mod simulator;
pub mod strategies;

pub use exec::Exec;
pub use graphs::{Graph, MaxcutSolution, QualityTable};
pub use optimize::{minimize, OptimizerConfig, OptimizerTrace};
pub use simulator::{CircuitSpec, ParameterSet, Statevector};

/// Largest qubit/vertex count accepted by dense tables and statevectors.
pub const DEFAULT_MAX_QUBITS: usize = 24;
