//! Benchmark harness: per-instance runs, suites over random graph ensembles,
//! statistics and output files.

pub mod config;
pub mod emit;
pub mod stats;

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BenchConfig, GraphClass, StrategyKind};
pub use emit::emit;
pub use stats::{proportion_ci, summarize, SummaryStats};

use crate::graphs::{gen_er, gen_regular, Graph, GraphError, QualityTable};
use crate::optimize::{minimize, OptError, OptimizerConfig, OptimizerTrace, Termination};
use crate::rng::derive_seed;
use crate::simulator::{CircuitSpec, ParameterSet, SimError};
use crate::strategies::{
    build_augmented, negated_expectation, pretrain_path_graph, random_init, NvBinding, NvHyperparams, NvObjective,
    PretrainBundle, StrategyError,
};

/// A run is "stuck" when it stops within this many steps...
pub const STUCK_MAX_STEPS: usize = 20;
/// ...having gained less than this much approximation ratio.
pub const STUCK_MIN_GAIN: f64 = 0.05;
/// Relative distance from the final ratio that counts as converged.
pub const CONVERGED_REL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("graph has no edges (q_max = 0)")]
    EdgelessGraph,
    #[error("pretrained strategy needs a pretrain bundle")]
    MissingBundle,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no records")]
    NoRecords,
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("bad CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// One optimization run on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub graph_id: String,
    pub class: String,
    pub index: usize,
    pub n: usize,
    pub edges: usize,
    pub connected: bool,
    pub strategy: StrategyKind,
    pub depth: usize,
    pub seed: u64,
    pub q_max: f64,
    /// Approximation ratio at the start and after each accepted step.
    pub ar_trace: Vec<f64>,
    pub final_ar: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub evaluations: usize,
    pub stuck: bool,
    /// First iteration whose ratio is within 0.1% of the final one.
    pub iters_to_converge: usize,
    /// Seconds; kept out of the JSON so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Everything a strategy needs besides the graph.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub bundle: Option<Arc<PretrainBundle>>,
    pub binding: NvBinding,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Strategy { kind, bundle: None, binding: NvBinding::Named }
    }

    pub fn with_bundle(mut self, bundle: Arc<PretrainBundle>) -> Self {
        self.bundle = Some(bundle);
        self
    }

    pub fn with_binding(mut self, binding: NvBinding) -> Self {
        self.binding = binding;
        self
    }
}

/// Identity of a graph within a suite.
#[derive(Clone, Debug, Default)]
pub struct GraphLabel {
    pub graph_id: String,
    pub class: String,
    pub index: usize,
}

fn bounded(opt: &OptimizerConfig, bounds: Vec<(f64, f64)>) -> OptimizerConfig {
    opt.clone().with_bounds(bounds)
}

/// Builds the strategy's circuit on `g`, trains it, and converts the cost
/// trace into approximation ratios against the brute-force optimum.
pub fn run_instance(
    g: &Graph,
    label: GraphLabel,
    strategy: &Strategy,
    depth: usize,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<RunRecord> {
    if g.edge_count() == 0 || g.total_weight() <= 0.0 {
        return Err(BenchError::EdgelessGraph);
    }
    let start = Instant::now();
    let table = Arc::new(QualityTable::build(g)?);
    let q_max = table.q_max();
    let trace: OptimizerTrace = match strategy.kind {
        StrategyKind::Random => {
            let circuit = CircuitSpec::qwoa(table.clone(), depth);
            let cfg = bounded(opt, vec![(0.0, TAU); 2 * depth]);
            minimize(negated_expectation(&circuit, &table), &random_init(depth, seed), &cfg)?.1
        }
        StrategyKind::Pretrained => {
            let bundle = strategy.bundle.as_deref().ok_or(BenchError::MissingBundle)?;
            if bundle.depth != depth {
                return Err(BenchError::Config(format!("bundle depth {} but run depth {depth}", bundle.depth)));
            }
            let (circuit, x0) = build_augmented(bundle, table.clone())?;
            let cfg = bounded(opt, vec![(0.0, TAU); 3 * depth]);
            minimize(negated_expectation(&circuit, &table), &x0, &cfg)?.1
        }
        StrategyKind::Nv => {
            let objective = NvObjective::new(table.clone(), depth, strategy.binding)?;
            let x0 = ParameterSet(NvHyperparams::random(seed).to_array().to_vec());
            let cfg = bounded(opt, NvHyperparams::bounds());
            minimize(objective.objective(), &x0, &cfg)?.1
        }
    };
    let ar_trace: Vec<f64> = trace.costs().map(|c| (-c / q_max).clamp(0.0, 1.0)).collect();
    let final_ar = *ar_trace.last().expect("trace has the initial record");
    let iterations = trace.iterations();
    let stuck = iterations < STUCK_MAX_STEPS && final_ar - ar_trace[0] < STUCK_MIN_GAIN;
    let iters_to_converge = ar_trace.iter().position(|&a| a >= final_ar * (1.0 - CONVERGED_REL)).unwrap_or(iterations);
    Ok(RunRecord {
        graph_id: label.graph_id,
        class: label.class,
        index: label.index,
        n: g.n(),
        edges: g.edge_count(),
        connected: g.is_connected(),
        strategy: strategy.kind,
        depth,
        seed,
        q_max,
        ar_trace,
        final_ar,
        iterations,
        termination: trace.termination,
        evaluations: trace.evaluations,
        stuck,
        iters_to_converge,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// A run that raised an error instead of producing a record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunFailure {
    pub graph_id: String,
    pub strategy: StrategyKind,
    pub error: String,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub bundle_path: Option<PathBuf>,
}

/// Graph `index` of class number `class_idx`.
pub fn suite_graph(cfg: &BenchConfig, class_idx: usize) -> impl Fn(usize) -> Result<Graph> + '_ {
    move |index| {
        let seed = derive_seed(cfg.seed, "bench/graph", &[class_idx as u64, index as u64]);
        Ok(match cfg.classes[class_idx] {
            GraphClass::Er { p_edge } => gen_er(cfg.n, p_edge, seed)?,
            GraphClass::Regular { degree } => gen_regular(cfg.n, degree, seed)?,
        })
    }
}

/// Loads the configured bundle if it matches `(n, depth)`, otherwise
/// pretrains (with the default optimizer settings) and saves one.
pub fn ensure_bundle(cfg: &BenchConfig) -> Result<(PathBuf, Arc<PretrainBundle>)> {
    let path = cfg.bundle_path();
    if path.exists() {
        let b = PretrainBundle::load(&path)?;
        if b.aux_n == cfg.n && b.depth == cfg.depth {
            return Ok((path, Arc::new(b)));
        }
        if cfg.bundle.is_some() {
            return Err(BenchError::Config(format!(
                "bundle {} is for n={}, p={}; config wants n={}, p={}",
                path.display(),
                b.aux_n,
                b.depth,
                cfg.n,
                cfg.depth
            )));
        }
    }
    let seed = derive_seed(cfg.seed, "bench/pretrain", &[cfg.n as u64, cfg.depth as u64]);
    let b = pretrain_path_graph(cfg.n, cfg.depth, seed, &OptimizerConfig::default())?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    b.save(&path)?;
    Ok((path, Arc::new(b)))
}

/// Runs every (class, instance, strategy) job. Records come back in job
/// order whatever the worker count; failed jobs are reported separately.
pub fn run_suite(cfg: &BenchConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let (bundle_path, bundle) = if cfg.strategies.contains(&StrategyKind::Pretrained) {
        let (p, b) = ensure_bundle(cfg)?;
        (Some(p), Some(b))
    } else {
        (None, None)
    };

    let mut graphs = Vec::new();
    for (ci, class) in cfg.classes.iter().enumerate() {
        let make = suite_graph(cfg, ci);
        for index in 0..cfg.instances {
            let label = GraphLabel { graph_id: format!("{}-{index:04}", class.label()), class: class.label().into(), index };
            graphs.push((ci, label, make(index)?));
        }
    }
    let strategies: Vec<Strategy> = cfg
        .strategies
        .iter()
        .map(|&k| Strategy { kind: k, bundle: bundle.clone(), binding: cfg.nv_binding })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..graphs.len()).flat_map(|g| (0..strategies.len()).map(move |s| (g, s))).collect();

    let run = |&(gi, si): &(usize, usize)| {
        let (ci, label, graph) = &graphs[gi];
        let strategy = &strategies[si];
        let seed = derive_seed(cfg.seed, "bench/run", &[*ci as u64, label.index as u64, strategy.kind.index()]);
        run_instance(graph, label.clone(), strategy, cfg.depth, &cfg.optimizer, seed).map_err(|e| RunFailure {
            graph_id: label.graph_id.clone(),
            strategy: strategy.kind,
            error: e.to_string(),
        })
    };
    let results = run_jobs(&jobs, cfg.workers, run)?;

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    Ok(SuiteOutcome { records, failures, bundle_path })
}

#[cfg(feature = "parallel")]
fn run_jobs<J, T, F>(jobs: &[J], workers: usize, f: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 {
        return Ok(jobs.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<J, T, F>(jobs: &[J], _workers: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(&J) -> T,
{
    Ok(jobs.iter().map(f).collect())
}
