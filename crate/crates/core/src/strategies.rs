//! Parameter strategies for QWOA: random initialization, pretraining on a
//! path-graph auxiliary problem followed by circuit augmentation, and the
//! three-hyperparameter NV schedule. Also hosts diagnostics for the mixer
//! conditions that the NV schedule relies on.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::graphs::{approx_ratio, Graph, GraphError, QualityTable};
use crate::optimize::{minimize, OptError, OptimizerConfig, OptimizerTrace};
use crate::rng;
use crate::simulator::{apply_mixer, gradient_adjoint, CircuitSpec, ParameterSet, SimError, Statevector};

/// Interior margin keeping β away from 0 and 1.
pub const BETA_MARGIN: f64 = 1e-3;
/// Approximation ratio the auxiliary problem must reach.
pub const PRETRAIN_THRESHOLD: f64 = 0.999;
pub const PRETRAIN_MAX_RESTARTS: usize = 8;
pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const DIAGNOSTICS_MAX_QUBITS: usize = 14;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("beta = {0} must lie in [{lo}, {hi}]", lo = BETA_MARGIN, hi = 1.0 - BETA_MARGIN)]
    BetaOutOfRange(f64),
    #[error("sigma = {0} must be positive")]
    NonPositiveSigma(f64),
    #[error("NV schedule needs depth >= 2, got {0}")]
    DepthTooSmall(usize),
    #[error("pretraining failed: best approximation ratio {best:.9} after {attempts} attempts")]
    PretrainFailed { best: f64, attempts: usize },
    #[error("bundle is for {bundle} qubits, target has {target}")]
    SizeMismatch { bundle: usize, target: usize },
    #[error("unsupported bundle format version {0}")]
    BundleVersion(u32),
    #[error("bad bundle: {0}")]
    BadBundle(String),
    #[error("mixer diagnostics need n <= {max}, got {n}")]
    DiagnosticsSize { n: usize, max: usize },
    #[error("t_small = {0} must lie in (0, pi/2)")]
    BadTime(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, StrategyError>;

/// `2p` angles i.i.d. uniform on `[0, 2π]`.
pub fn random_init(p: usize, seed: u64) -> ParameterSet {
    let mut rng = rng::stream(seed, "strategy/random-init", &[p as u64]);
    ParameterSet((0..2 * p).map(|_| rng.random_range(0.0..=TAU)).collect())
}

/// Objective `θ ↦ (−⟨Q⟩, −∇⟨Q⟩)` for the optimizer.
pub fn negated_expectation<'a>(
    circuit: &'a CircuitSpec,
    observable: &'a QualityTable,
) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) + 'a {
    move |theta| {
        let params = ParameterSet(theta.to_vec());
        let (value, mut grad) = gradient_adjoint(circuit, &params, observable).expect("dimensions checked by caller");
        grad.iter_mut().for_each(|g| *g = -*g);
        (-value, grad)
    }
}

/// Which NV ramp drives which generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NvBinding {
    /// Increasing σ-normalized ramp on the phase gates, decreasing ramp on the mixer.
    #[default]
    Named,
    /// Increasing ramp on the mixer, decreasing ramp on the phase gates.
    Literal,
}

impl FromStr for NvBinding {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "named" => Ok(NvBinding::Named),
            "literal" => Ok(NvBinding::Literal),
            other => Err(format!("unknown nv binding {other:?} (expected named|literal)")),
        }
    }
}

impl fmt::Display for NvBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NvBinding::Named => "named",
            NvBinding::Literal => "literal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvHyperparams {
    pub beta: f64,
    pub gamma: f64,
    pub t: f64,
}

impl NvHyperparams {
    pub fn new(beta: f64, gamma: f64, t: f64) -> Result<Self> {
        if !(BETA_MARGIN..=1.0 - BETA_MARGIN).contains(&beta) {
            return Err(StrategyError::BetaOutOfRange(beta));
        }
        Ok(NvHyperparams { beta, gamma, t })
    }

    /// β ~ U(0.05, 0.95), γ ~ U(0, 2π), t ~ U(0, 2π).
    pub fn random(seed: u64) -> Self {
        let mut rng = rng::stream(seed, "strategy/nv-init", &[]);
        NvHyperparams {
            beta: rng.random_range(0.05..0.95),
            gamma: rng.random_range(0.0..TAU),
            t: rng.random_range(0.0..TAU),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.beta, self.gamma, self.t]
    }

    /// Optimizer box: β inside the interior margin, γ and t in `[0, 2π]`.
    pub fn bounds() -> Vec<(f64, f64)> {
        vec![(BETA_MARGIN, 1.0 - BETA_MARGIN), (0.0, TAU), (0.0, TAU)]
    }
}

/// Per-layer NV angles.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// `γ_k`, rising from `βγ/σ` to `γ/σ`.
    pub gammas: Vec<f64>,
    /// `t_k`, falling from `t` to `βt`.
    pub times: Vec<f64>,
}

fn ramp_positions(p: usize) -> impl Iterator<Item = f64> {
    let last = (p - 1) as f64;
    (0..p).map(move |k| k as f64 / last)
}

pub fn nv_schedule(hp: NvHyperparams, p: usize, sigma: f64) -> Result<Schedule> {
    if p < 2 {
        return Err(StrategyError::DepthTooSmall(p));
    }
    if !(sigma > 0.0) {
        return Err(StrategyError::NonPositiveSigma(sigma));
    }
    let scale = hp.gamma / sigma;
    // Written as convex combinations so both endpoints come out exact.
    let gammas = ramp_positions(p).map(|s| scale * ((1.0 - s) * hp.beta + s)).collect();
    let times = ramp_positions(p).map(|s| hp.t * ((1.0 - s) + s * hp.beta)).collect();
    Ok(Schedule { gammas, times })
}

impl Schedule {
    /// Interleaved QWOA parameters `[phase_0, mixer_0, phase_1, ...]`.
    pub fn to_params(&self, binding: NvBinding) -> ParameterSet {
        let (phase, mixer) = match binding {
            NvBinding::Named => (&self.gammas, &self.times),
            NvBinding::Literal => (&self.times, &self.gammas),
        };
        ParameterSet(phase.iter().zip(mixer).flat_map(|(&a, &b)| [a, b]).collect())
    }
}

/// Cost `−⟨Q⟩` of the NV circuit and its gradient with respect to `(β, γ, t)`.
pub struct NvObjective {
    circuit: CircuitSpec,
    table: Arc<QualityTable>,
    p: usize,
    sigma: f64,
    binding: NvBinding,
}

impl NvObjective {
    pub fn new(table: Arc<QualityTable>, p: usize, binding: NvBinding) -> Result<Self> {
        let sigma = table.sigma();
        Self::with_sigma(table, p, binding, sigma)
    }

    pub fn with_sigma(table: Arc<QualityTable>, p: usize, binding: NvBinding, sigma: f64) -> Result<Self> {
        if p < 2 {
            return Err(StrategyError::DepthTooSmall(p));
        }
        if !(sigma > 0.0) {
            return Err(StrategyError::NonPositiveSigma(sigma));
        }
        let circuit = CircuitSpec::qwoa(table.clone(), p);
        Ok(NvObjective { circuit, table, p, sigma, binding })
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn params(&self, hp: NvHyperparams) -> ParameterSet {
        nv_schedule(hp, self.p, self.sigma).expect("validated in constructor").to_params(self.binding)
    }

    /// Returns `(cost, d cost / d(β, γ, t))`.
    pub fn cost_grad(&self, hp: NvHyperparams) -> (f64, [f64; 3]) {
        let params = self.params(hp);
        let (value, g) = gradient_adjoint(&self.circuit, &params, &self.table).expect("dimensions match");
        let mut grad = [0.0; 3];
        for (k, s) in ramp_positions(self.p).enumerate() {
            // Partial derivatives of the two ramps.
            let dgam_dbeta = hp.gamma / self.sigma * (1.0 - s);
            let dgam_dgamma = ((1.0 - s) * hp.beta + s) / self.sigma;
            let dtime_dbeta = hp.t * s;
            let dtime_dt = (1.0 - s) + s * hp.beta;
            let (g_gam, g_time) = match self.binding {
                NvBinding::Named => (g[2 * k], g[2 * k + 1]),
                NvBinding::Literal => (g[2 * k + 1], g[2 * k]),
            };
            grad[0] += g_gam * dgam_dbeta + g_time * dtime_dbeta;
            grad[1] += g_gam * dgam_dgamma;
            grad[2] += g_time * dtime_dt;
        }
        (-value, grad.map(|v| -v))
    }

    /// Adapter for [`minimize`] over `[β, γ, t]`.
    pub fn objective(&self) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) + '_ {
        move |x| {
            let (c, g) = self.cost_grad(NvHyperparams { beta: x[0], gamma: x[1], t: x[2] });
            (c, g.to_vec())
        }
    }
}

pub fn nv_cost_grad(hp: NvHyperparams, table: Arc<QualityTable>, p: usize, binding: NvBinding) -> Result<(f64, [f64; 3])> {
    Ok(NvObjective::new(table, p, binding)?.cost_grad(hp))
}

/// Optimal QWOA parameters for the path graph on `aux_n` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainBundle {
    pub aux_n: usize,
    pub depth: usize,
    /// Interleaved `[phase_0, mixer_0, ...]`, `2 * depth` values.
    pub aux_params: ParameterSet,
    pub aux_approx_ratio: f64,
    pub seed: u64,
    pub attempts: usize,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    format_version: u32,
    aux_graph: String,
    n: usize,
    p: usize,
    seed: u64,
    attempts: usize,
    aux_approx_ratio: f64,
    phase_angles: Vec<f64>,
    mixer_angles: Vec<f64>,
}

impl PretrainBundle {
    pub fn to_json(&self) -> Result<String> {
        let file = BundleFile {
            format_version: BUNDLE_FORMAT_VERSION,
            aux_graph: "path".into(),
            n: self.aux_n,
            p: self.depth,
            seed: self.seed,
            attempts: self.attempts,
            aux_approx_ratio: self.aux_approx_ratio,
            phase_angles: self.aux_params.values().iter().step_by(2).copied().collect(),
            mixer_angles: self.aux_params.values().iter().skip(1).step_by(2).copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BundleFile = serde_json::from_str(text)?;
        if file.format_version != BUNDLE_FORMAT_VERSION {
            return Err(StrategyError::BundleVersion(file.format_version));
        }
        if file.aux_graph != "path" {
            return Err(StrategyError::BadBundle(format!("auxiliary graph {:?}", file.aux_graph)));
        }
        if file.phase_angles.len() != file.p || file.mixer_angles.len() != file.p {
            return Err(StrategyError::BadBundle(format!("expected {} angles per generator", file.p)));
        }
        let aux_params = file.phase_angles.iter().zip(&file.mixer_angles).flat_map(|(&a, &b)| [a, b]).collect();
        Ok(PretrainBundle {
            aux_n: file.n,
            depth: file.p,
            aux_params: ParameterSet(aux_params),
            aux_approx_ratio: file.aux_approx_ratio,
            seed: file.seed,
            attempts: file.attempts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn aux_table(&self) -> Result<QualityTable> {
        Ok(QualityTable::build(&Graph::path(self.aux_n)?)?)
    }
}

/// Trains standard QWOA on the path graph `P_n` from random starts until the
/// approximation ratio reaches [`PRETRAIN_THRESHOLD`], restarting with fresh
/// seeds up to [`PRETRAIN_MAX_RESTARTS`] times.
pub fn pretrain_path_graph(n: usize, p: usize, seed: u64, opt: &OptimizerConfig) -> Result<PretrainBundle> {
    let table = Arc::new(QualityTable::build(&Graph::path(n)?)?);
    let circuit = CircuitSpec::qwoa(table.clone(), p);
    let mut cfg = opt.clone();
    if cfg.bounds.is_none() {
        cfg = cfg.with_uniform_bounds(2 * p, 0.0, TAU);
    }
    let mut best: Option<(f64, ParameterSet)> = None;
    let attempts = PRETRAIN_MAX_RESTARTS + 1;
    for attempt in 0..attempts {
        let x0 = random_init(p, rng::derive_seed(seed, "pretrain/attempt", &[attempt as u64]));
        let (x, trace): (ParameterSet, OptimizerTrace) = minimize(negated_expectation(&circuit, &table), &x0, &cfg)?;
        let final_cost = trace.records.last().expect("trace has the initial record").cost;
        let ratio = approx_ratio(-final_cost, table.q_max())?;
        if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            best = Some((ratio, x));
        }
        if ratio >= PRETRAIN_THRESHOLD {
            let (aux_approx_ratio, aux_params) = best.expect("just set");
            return Ok(PretrainBundle { aux_n: n, depth: p, aux_params, aux_approx_ratio, seed, attempts: attempt + 1 });
        }
    }
    Err(StrategyError::PretrainFailed { best: best.map_or(0.0, |b| b.0), attempts })
}

/// Pretrained-QWOA circuit on `target` with auxiliary angles taken from the
/// bundle and every target-phase angle set to zero.
pub fn build_augmented(bundle: &PretrainBundle, target: Arc<QualityTable>) -> Result<(CircuitSpec, ParameterSet)> {
    if bundle.aux_n != target.n() {
        return Err(StrategyError::SizeMismatch { bundle: bundle.aux_n, target: target.n() });
    }
    let aux = Arc::new(bundle.aux_table()?);
    let circuit = CircuitSpec::augmented(target, aux, bundle.depth)?;
    let params = bundle
        .aux_params
        .values()
        .chunks_exact(2)
        .flat_map(|layer| [0.0, layer[0], layer[1]])
        .collect();
    Ok((circuit, ParameterSet(params)))
}

/// Checks of the two mixer conditions behind the NV schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixerDiagnostics {
    pub n: usize,
    /// Hamming-graph diameter.
    pub diameter: usize,
    pub sphere_sizes: Vec<u64>,
    /// `|e^{-iMt}|y⟩|` at distance δ, i.e. `cos(t)^(n−δ) sin(t)^δ`.
    pub moduli: Vec<f64>,
    /// Max deviation of any amplitude from `modulus_δ · e^{−iδπ/2}`, over all `y`.
    pub phase_residual: f64,
    /// Sphere means `μ_{δ,x}` averaged over all `x`.
    pub sphere_means: Vec<f64>,
    pub global_mean: f64,
    /// Least-squares slope in `μ_{δ,x} − q(x) ≈ −α_δ (q(x) − μ)`; `α_0 = 0`.
    pub alphas: Vec<f64>,
    /// RMS residual of each α fit.
    pub fit_residuals: Vec<f64>,
    /// `α_δ` nondecreasing for `δ ≤ n/2`.
    pub monotone_to_half: bool,
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

pub fn mixer_diagnostics(table: &QualityTable, t_small: f64) -> Result<MixerDiagnostics> {
    mixer_diagnostics_with(table, t_small, Exec::default())
}

pub fn mixer_diagnostics_with(table: &QualityTable, t_small: f64, exec: Exec) -> Result<MixerDiagnostics> {
    let n = table.n();
    if n > DIAGNOSTICS_MAX_QUBITS {
        return Err(StrategyError::DiagnosticsSize { n, max: DIAGNOSTICS_MAX_QUBITS });
    }
    if !(t_small > 0.0 && t_small < FRAC_PI_2) {
        return Err(StrategyError::BadTime(t_small));
    }
    let dim = 1usize << n;
    let (s, c) = t_small.sin_cos();
    let moduli: Vec<f64> = (0..=n).map(|d| c.powi((n - d) as i32) * s.powi(d as i32)).collect();
    let expected: Vec<Complex64> = (0..=n)
        .map(|d| Complex64::from_polar(moduli[d], -(d as f64) * PI / 2.0))
        .collect();

    let phase_residual = exec
        .map_range(dim, |y| {
            let mut state = Statevector::basis(n, y).expect("n checked");
            apply_mixer(&mut state, t_small);
            state
                .amps()
                .iter()
                .enumerate()
                .map(|(x, a)| (a - expected[(x ^ y).count_ones() as usize]).norm())
                .fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max);

    let q = table.values();
    let sphere_sizes: Vec<u64> = (0..=n).map(|d| binomial(n, d)).collect();
    // sums[x][δ] = Σ_{d(x,y)=δ} q(y)
    let sums: Vec<Vec<f64>> = exec.map_range(dim, |x| {
        let mut acc = vec![0.0; n + 1];
        for (y, &qy) in q.iter().enumerate() {
            acc[(x ^ y).count_ones() as usize] += qy;
        }
        acc
    });
    let mu = table.mu();
    let denom: f64 = q.iter().map(|v| (v - mu) * (v - mu)).sum();
    let mut sphere_means = Vec::with_capacity(n + 1);
    let mut alphas = Vec::with_capacity(n + 1);
    let mut fit_residuals = Vec::with_capacity(n + 1);
    for d in 0..=n {
        let size = sphere_sizes[d] as f64;
        let local: Vec<f64> = sums.iter().map(|row| row[d] / size).collect();
        sphere_means.push(local.iter().sum::<f64>() / dim as f64);
        let alpha = if d == 0 || denom == 0.0 {
            0.0
        } else {
            -local.iter().zip(q).map(|(m, qx)| (m - qx) * (qx - mu)).sum::<f64>() / denom
        };
        let rss: f64 = local.iter().zip(q).map(|(m, qx)| ((m - qx) + alpha * (qx - mu)).powi(2)).sum();
        alphas.push(alpha);
        fit_residuals.push((rss / dim as f64).sqrt());
    }
    let monotone_to_half = (1..=n / 2).all(|d| alphas[d] >= alphas[d - 1] - 1e-12);
    Ok(MixerDiagnostics {
        n,
        diameter: n,
        sphere_sizes,
        moduli,
        phase_residual,
        sphere_means,
        global_mean: mu,
        alphas,
        fit_residuals,
        monotone_to_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::gen_regular;
    use crate::simulator::{expectation, run_pqc};

    fn edge_table() -> Arc<QualityTable> {
        Arc::new(QualityTable::build(&Graph::from_edges(2, [(0, 1)]).unwrap()).unwrap())
    }

    #[test]
    fn random_init_contract() {
        let a = random_init(256, 17);
        assert_eq!(a.len(), 512);
        assert!(a.within(0.0, TAU));
        assert_eq!(a, random_init(256, 17));
        assert_ne!(a, random_init(256, 18));
        assert_eq!(random_init(1, 3).len(), 2);
    }

    #[test]
    fn schedule_endpoints() {
        let s = nv_schedule(NvHyperparams::new(0.5, 1.0, 1.0).unwrap(), 2, 1.0).unwrap();
        assert_eq!(s.gammas, vec![0.5, 1.0]);
        assert_eq!(s.times, vec![1.0, 0.5]);

        let hp = NvHyperparams::new(0.35, 5.3, 4.0).unwrap();
        let sigma = 1.7;
        let s = nv_schedule(hp, 256, sigma).unwrap();
        assert_eq!(s.gammas[0], 5.3 / sigma * 0.35);
        assert_eq!(s.gammas[255], 5.3 / sigma);
        assert_eq!(s.times[0], 4.0);
        assert_eq!(s.times[255], 4.0 * 0.35);
        assert!(s.gammas.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.times.windows(2).all(|w| w[0] >= w[1]));

        let flat = nv_schedule(NvHyperparams { beta: 1.0, gamma: 2.0, t: 3.0 }, 5, 2.0).unwrap();
        assert!(flat.gammas.iter().all(|&g| g == 1.0));
        assert!(flat.times.iter().all(|&t| t == 3.0));
    }

    #[test]
    fn schedule_errors() {
        let hp = NvHyperparams::new(0.5, 1.0, 1.0).unwrap();
        assert!(matches!(nv_schedule(hp, 1, 1.0), Err(StrategyError::DepthTooSmall(1))));
        assert!(matches!(nv_schedule(hp, 4, 0.0), Err(StrategyError::NonPositiveSigma(_))));
        assert!(matches!(NvHyperparams::new(0.0, 1.0, 1.0), Err(StrategyError::BetaOutOfRange(_))));
        assert!(matches!(NvHyperparams::new(0.9995, 1.0, 1.0), Err(StrategyError::BetaOutOfRange(_))));
    }

    #[test]
    fn binding_swaps_generators() {
        let s = nv_schedule(NvHyperparams::new(0.5, 2.0, 3.0).unwrap(), 3, 1.0).unwrap();
        let named = s.to_params(NvBinding::Named);
        let literal = s.to_params(NvBinding::Literal);
        assert_eq!(named.values()[0], s.gammas[0]);
        assert_eq!(named.values()[1], s.times[0]);
        assert_eq!(literal.values()[0], s.times[0]);
        assert_eq!(literal.values()[1], s.gammas[0]);
        assert_eq!("literal".parse::<NvBinding>().unwrap(), NvBinding::Literal);
        assert!("other".parse::<NvBinding>().is_err());
    }

    #[test]
    fn nv_gamma_zero_reduces_to_mean() {
        let table = Arc::new(QualityTable::build(&Graph::cycle(4).unwrap()).unwrap());
        let (cost, grad) = nv_cost_grad(NvHyperparams::new(0.4, 0.0, 1.3).unwrap(), table.clone(), 4, NvBinding::Named).unwrap();
        assert!((cost + table.mu()).abs() < 1e-12);
        assert!(grad[0].abs() < 1e-12);
        assert!(grad[2].abs() < 1e-12);
    }

    #[test]
    fn augmented_start_reproduces_aux_state() {
        let aux_table = Arc::new(QualityTable::build(&Graph::path(4).unwrap()).unwrap());
        let aux_params = random_init(3, 5);
        let bundle = PretrainBundle { aux_n: 4, depth: 3, aux_params: aux_params.clone(), aux_approx_ratio: 1.0, seed: 0, attempts: 1 };
        let target = Arc::new(QualityTable::build(&Graph::complete(4).unwrap()).unwrap());
        let (circuit, params) = build_augmented(&bundle, target.clone()).unwrap();
        assert_eq!(params.len(), 9);
        let a = run_pqc(&circuit, &params).unwrap();
        let b = run_pqc(&CircuitSpec::qwoa(aux_table, 3), &aux_params).unwrap();
        assert_eq!(a, b);
        assert_eq!(expectation(&a, &target).unwrap(), expectation(&b, &target).unwrap());

        let wrong = Arc::new(QualityTable::build(&Graph::complete(5).unwrap()).unwrap());
        assert!(matches!(build_augmented(&bundle, wrong), Err(StrategyError::SizeMismatch { .. })));
    }

    #[test]
    fn bundle_round_trip_and_version_check() {
        let bundle = PretrainBundle { aux_n: 3, depth: 2, aux_params: ParameterSet(vec![0.1, 0.2, 0.3, 0.4]), aux_approx_ratio: 0.9995, seed: 9, attempts: 2 };
        let text = bundle.to_json().unwrap();
        assert_eq!(PretrainBundle::from_json(&text).unwrap(), bundle);
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(PretrainBundle::from_json(&bumped), Err(StrategyError::BundleVersion(7))));
    }

    #[test]
    fn pretrain_single_edge() {
        let bundle = pretrain_path_graph(2, 4, 1, &OptimizerConfig::default()).unwrap();
        assert_eq!(bundle.aux_params.len(), 8);
        assert!(bundle.aux_approx_ratio >= PRETRAIN_THRESHOLD);
        assert!(bundle.aux_params.within(0.0, TAU));
    }

    #[test]
    fn diagnostics_single_edge() {
        let t = std::f64::consts::PI / 8.0;
        let d = mixer_diagnostics(&edge_table(), t).unwrap();
        let (s, c) = t.sin_cos();
        assert!((d.moduli[0] - c * c).abs() < 1e-15);
        assert!((d.moduli[1] - c * s).abs() < 1e-15);
        assert!((d.moduli[2] - s * s).abs() < 1e-15);
        assert!(d.phase_residual < 1e-12);
        assert_eq!(d.sphere_sizes, vec![1, 2, 1]);
        // Sphere means worked by hand over the four bitstrings: one flip always
        // toggles the single edge, two flips never do.
        assert_eq!(d.alphas, vec![0.0, 2.0, 0.0]);
        assert!(d.fit_residuals.iter().all(|&r| r < 1e-12));
        assert!(d.monotone_to_half);
    }

    #[test]
    fn diagnostics_regular_graph() {
        let g = gen_regular(10, 3, 4).unwrap();
        let table = QualityTable::build(&g).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let d = mixer_diagnostics(&table, t).unwrap();
            assert!(d.phase_residual < 1e-10);
            assert!(d.monotone_to_half);
            assert!((1..=5).all(|k| d.alphas[k] > d.alphas[k - 1]));
            assert_eq!(d.sphere_sizes.iter().sum::<u64>(), 1024);
        }
    }

    #[test]
    fn diagnostics_limits() {
        let t = edge_table();
        assert!(matches!(mixer_diagnostics(&t, 0.0), Err(StrategyError::BadTime(_))));
        assert!(matches!(mixer_diagnostics(&t, 2.0), Err(StrategyError::BadTime(_))));
        let big = QualityTable::build(&Graph::new(15).unwrap()).unwrap();
        assert!(matches!(mixer_diagnostics(&big, 0.3), Err(StrategyError::DiagnosticsSize { .. })));
    }
}
