//! Box-constrained L-BFGS.
//!
//! Search directions come from the two-loop recursion over the last `memory`
//! curvature pairs. Bounds are handled by zeroing direction components that
//! push against an active bound and by projecting every trial point back into
//! the box, so the line search runs along the projected path
//! `α ↦ P(x + α d)`. Steps must satisfy the strong Wolfe conditions; if the
//! bracket collapses first, the best point with sufficient decrease is taken.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::ParameterSet;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 40;
const CURVATURE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum OptError {
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("starting point lies outside the bounds at index {0}")]
    StartOutOfBounds(usize),
    #[error("invalid optimizer config: {0}")]
    BadConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub memory: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    /// Per-parameter `[lo, hi]`; `None` means unconstrained.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iters: 500, memory: 10, grad_tol: 1e-6, f_tol: 1e-9, bounds: None }
    }
}

impl OptimizerConfig {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    /// Same `[lo, hi]` box on each of `len` parameters.
    pub fn with_uniform_bounds(self, len: usize, lo: f64, hi: f64) -> Self {
        self.with_bounds(vec![(lo, hi); len])
    }

    fn validate(&self, dim: usize) -> Result<(), OptError> {
        if self.max_iters == 0 {
            return Err(OptError::BadConfig("max_iters must be at least 1".into()));
        }
        if let Some(b) = &self.bounds {
            if b.len() != dim {
                return Err(OptError::BadConfig(format!("{} bounds for {dim} parameters", b.len())));
            }
            if let Some(i) = b.iter().position(|(lo, hi)| !(lo <= hi)) {
                return Err(OptError::BadConfig(format!("bound {i} has lo > hi")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    FTol,
    MaxIters,
    LineSearchFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub cost: f64,
    /// Infinity norm of the projected gradient.
    pub grad_norm: f64,
    /// Euclidean length of the accepted step.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    /// Entry 0 is the starting point; entry `k` follows the `k`-th accepted step.
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    pub evaluations: usize,
}

impl OptimizerTrace {
    /// Number of accepted quasi-Newton steps.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.cost)
    }
}

struct BoxBounds<'a>(Option<&'a [(f64, f64)]>);

impl BoxBounds<'_> {
    fn project(&self, x: &mut [f64]) {
        if let Some(b) = self.0 {
            for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
                *xi = xi.clamp(lo, hi);
            }
        }
    }

    fn projected_grad_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        match self.0 {
            None => g.iter().fold(0.0, |m, v| m.max(v.abs())),
            Some(b) => x
                .iter()
                .zip(g)
                .zip(b)
                .fold(0.0, |m, ((&xi, &gi), &(lo, hi))| m.max((xi - (xi - gi).clamp(lo, hi)).abs())),
        }
    }

    /// Drops components that would immediately leave the box.
    fn mask_direction(&self, x: &[f64], d: &mut [f64]) {
        if let Some(b) = self.0 {
            for ((di, &xi), &(lo, hi)) in d.iter_mut().zip(x).zip(b) {
                if (xi <= lo && *di < 0.0) || (xi >= hi && *di > 0.0) {
                    *di = 0.0;
                }
            }
        }
    }

    /// Step length past which the projected path stops moving.
    fn max_step(&self, x: &[f64], d: &[f64]) -> f64 {
        let Some(b) = self.0 else { return f64::INFINITY };
        let mut last = 0.0f64;
        for ((&xi, &di), &(lo, hi)) in x.iter().zip(d).zip(b) {
            let t = if di > 0.0 {
                (hi - xi) / di
            } else if di < 0.0 {
                (lo - xi) / di
            } else {
                continue;
            };
            if t.is_finite() {
                last = last.max(t);
            } else {
                return f64::INFINITY;
            }
        }
        last
    }

    /// Derivative direction of `α ↦ P(x + α d)` at `α`.
    fn effective_direction(&self, x: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
        match self.0 {
            None => d.to_vec(),
            Some(b) => x
                .iter()
                .zip(d)
                .zip(b)
                .map(|((&xi, &di), &(lo, hi))| {
                    let t = xi + alpha * di;
                    if (di > 0.0 && t >= hi) || (di < 0.0 && t <= lo) {
                        0.0
                    } else {
                        di
                    }
                })
                .collect(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H g` via the two-loop recursion, with `H0 = (s·y / y·y) I` from the newest pair.
fn two_loop(g: &[f64], history: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for p in history.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(p) = history.back() {
        let scale = 1.0 / (p.rho * dot(&p.y, &p.y));
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for (p, a) in history.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[derive(Clone)]
struct Probe {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

struct LineSearch<'a, F> {
    objective: &'a mut F,
    bounds: &'a BoxBounds<'a>,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    dphi0: f64,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn probe(&mut self, alpha: f64) -> Probe {
        let mut x: Vec<f64> = self.x.iter().zip(self.d).map(|(xi, di)| xi + alpha * di).collect();
        self.bounds.project(&mut x);
        let (f, g) = (self.objective)(&x);
        self.evaluations += 1;
        let f = if f.is_finite() { f } else { f64::INFINITY };
        let dphi = dot(&g, &self.bounds.effective_direction(self.x, self.d, alpha));
        Probe { alpha, x, f, g, dphi }
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.f <= self.f0 + C1 * p.alpha * self.dphi0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.dphi.abs() <= -C2 * self.dphi0
    }

    fn run(&mut self, alpha_init: f64, alpha_max: f64) -> Option<Probe> {
        let start = Probe { alpha: 0.0, x: self.x.to_vec(), f: self.f0, g: Vec::new(), dphi: self.dphi0 };
        let mut prev = start;
        let mut alpha = alpha_init.min(alpha_max);
        for i in 0..MAX_LINE_SEARCH {
            let p = self.probe(alpha);
            if !self.armijo(&p) || (i > 0 && p.f >= prev.f) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.dphi >= 0.0 {
                return self.zoom(p, prev);
            }
            if alpha >= alpha_max {
                return Some(p);
            }
            alpha = (2.0 * alpha).min(alpha_max);
            prev = p;
        }
        (prev.alpha > 0.0).then_some(prev)
    }

    /// `lo` satisfies sufficient decrease with the lowest value seen so far.
    fn zoom(&mut self, mut lo: Probe, mut hi: Probe) -> Option<Probe> {
        for _ in 0..MAX_LINE_SEARCH {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= 1e-14 * b.max(1.0) {
                break;
            }
            let mut alpha = cubic_min(&lo, &hi).unwrap_or(0.5 * (a + b));
            if !(alpha > a + 0.1 * width && alpha < b - 0.1 * width) {
                alpha = 0.5 * (a + b);
            }
            let p = self.probe(alpha);
            if !self.armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if self.curvature(&p) {
                    return Some(p);
                }
                if p.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
        (lo.alpha > 0.0).then_some(lo)
    }
}

// Minimizer of the cubic matching value and slope at both ends.
fn cubic_min(p: &Probe, q: &Probe) -> Option<f64> {
    if !p.f.is_finite() || !q.f.is_finite() {
        return None;
    }
    let d1 = p.dphi + q.dphi - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.dphi * q.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (q.alpha - p.alpha).signum() * disc.sqrt();
    let denom = q.dphi - p.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = q.alpha - (q.alpha - p.alpha) * (q.dphi + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

/// Minimizes `objective` (returning value and gradient) from `x0`.
pub fn minimize<F>(
    mut objective: F,
    x0: &ParameterSet,
    cfg: &OptimizerConfig,
) -> Result<(ParameterSet, OptimizerTrace), OptError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let dim = x0.len();
    cfg.validate(dim)?;
    let bounds = BoxBounds(cfg.bounds.as_deref());
    if let Some(b) = &cfg.bounds {
        if let Some(i) = x0.values().iter().zip(b).position(|(x, (lo, hi))| !(lo <= x && x <= hi)) {
            return Err(OptError::StartOutOfBounds(i));
        }
    }
    let mut x = x0.values().to_vec();
    let (mut f, mut g) = objective(&x);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(OptError::NonFiniteStart);
    }

    let mut records = vec![IterRecord { iteration: 0, cost: f, grad_norm: bounds.projected_grad_norm(&x, &g), step: 0.0 }];
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut termination = Termination::MaxIters;

    for iteration in 1..=cfg.max_iters {
        if records.last().unwrap().grad_norm <= cfg.grad_tol {
            termination = Termination::GradTol;
            break;
        }

        let mut accepted = None;
        // Quasi-Newton direction first; on failure retry once with steepest descent.
        for attempt in 0..2 {
            if attempt == 1 {
                if history.is_empty() {
                    break;
                }
                history.clear();
            }
            let mut d = two_loop(&g, &history);
            bounds.mask_direction(&x, &mut d);
            let mut dphi0 = dot(&g, &d);
            if !(dphi0 < 0.0) {
                history.clear();
                d = g.iter().map(|v| -v).collect();
                bounds.mask_direction(&x, &mut d);
                dphi0 = dot(&g, &d);
                if !(dphi0 < 0.0) {
                    break;
                }
            }
            let alpha_init = if history.is_empty() { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
            let alpha_max = bounds.max_step(&x, &d);
            let mut ls = LineSearch { objective: &mut objective, bounds: &bounds, x: &x, d: &d, f0: f, dphi0, evaluations: 0 };
            let found = ls.run(alpha_init, alpha_max);
            evaluations += ls.evaluations;
            if let Some(p) = found {
                accepted = Some(p);
                break;
            }
        }
        let Some(p) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > CURVATURE_EPS * norm(&s) * norm(&y) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            if cfg.memory > 0 {
                history.push_back(Pair { s: s.clone(), y, rho: 1.0 / sy });
            }
        }

        let f_old = f;
        x = p.x;
        f = p.f;
        g = p.g;
        records.push(IterRecord { iteration, cost: f, grad_norm: bounds.projected_grad_norm(&x, &g), step: norm(&s) });

        if (f_old - f) <= cfg.f_tol * f_old.abs().max(f.abs()).max(1.0) {
            termination = Termination::FTol;
            break;
        }
    }
    if termination == Termination::MaxIters && records.last().unwrap().grad_norm <= cfg.grad_tol {
        termination = Termination::GradTol;
    }

    Ok((ParameterSet(x), OptimizerTrace { records, termination, evaluations }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: Vec<f64>) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) {
        move |x| {
            let f = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = x.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect();
            (f, g)
        }
    }

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn quadratic_converges_quickly() {
        let c: Vec<f64> = (0..8).map(|i| i as f64 * 0.7 - 2.0).collect();
        let cfg = OptimizerConfig { grad_tol: 1e-10, ..Default::default() };
        let (x, trace) = minimize(quadratic(c.clone()), &ParameterSet::zeros(8), &cfg).unwrap();
        for (a, b) in x.values().iter().zip(&c) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(trace.iterations() <= 8 + 5, "{} iterations", trace.iterations());
    }

    #[test]
    fn rosenbrock_minimum() {
        let cfg = OptimizerConfig { grad_tol: 1e-10, f_tol: 0.0, max_iters: 1000, ..Default::default() };
        let (x, trace) = minimize(rosenbrock, &ParameterSet(vec![-1.2, 1.0]), &cfg).unwrap();
        assert!((x.values()[0] - 1.0).abs() < 1e-5 && (x.values()[1] - 1.0).abs() < 1e-5, "{x:?} {:?}", trace.termination);
    }

    #[test]
    fn bound_constrained_minimum_is_on_the_boundary() {
        let cfg = OptimizerConfig::default().with_uniform_bounds(1, 1.0, 2.0);
        let f = |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]);
        let (x, trace) = minimize(f, &ParameterSet(vec![1.5]), &cfg).unwrap();
        assert_eq!(x.values()[0], 1.0);
        assert_eq!(trace.termination, Termination::GradTol);
    }

    #[test]
    fn trace_is_monotone_and_bounded() {
        let cfg = OptimizerConfig { max_iters: 30, ..Default::default() }.with_uniform_bounds(2, -0.5, 0.8);
        let (x, trace) = minimize(rosenbrock, &ParameterSet(vec![-0.5, 0.8]), &cfg).unwrap();
        assert!(x.within(-0.5, 0.8));
        assert!(trace.records.len() <= 31);
        for w in trace.records.windows(2) {
            assert!(w[1].cost <= w[0].cost);
        }
    }

    #[test]
    fn error_paths() {
        let bad = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert_eq!(minimize(bad, &ParameterSet(vec![0.0]), &OptimizerConfig::default()).unwrap_err(), OptError::NonFiniteStart);
        let cfg = OptimizerConfig::default().with_uniform_bounds(1, 0.0, 1.0);
        assert_eq!(
            minimize(quadratic(vec![0.0]), &ParameterSet(vec![2.0]), &cfg).unwrap_err(),
            OptError::StartOutOfBounds(0)
        );
        let cfg = OptimizerConfig { max_iters: 0, ..Default::default() };
        assert!(matches!(minimize(quadratic(vec![0.0]), &ParameterSet(vec![2.0]), &cfg), Err(OptError::BadConfig(_))));
    }

    #[test]
    fn deterministic_traces() {
        let cfg = OptimizerConfig::default();
        let a = minimize(rosenbrock, &ParameterSet(vec![-1.2, 1.0]), &cfg).unwrap();
        let b = minimize(rosenbrock, &ParameterSet(vec![-1.2, 1.0]), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
