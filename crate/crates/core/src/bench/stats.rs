//! Ensemble statistics over run records.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{BenchError, Result, RunRecord, StrategyKind};
use crate::graphs::{GW_THRESHOLD, GW_THRESHOLD_3_REGULAR};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;
pub const NEAR_OPTIMAL: f64 = 0.9999;

/// Binomial proportion with its normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProportionCi {
    pub successes: usize,
    pub n: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `p̂ ± 1.96·√(p̂(1−p̂)/N)`, not clipped to `[0, 1]`.
pub fn proportion_ci(successes: usize, n: usize) -> Result<ProportionCi> {
    if n == 0 || successes > n {
        return Err(BenchError::EmptyGroup(format!("{successes} successes out of {n}")));
    }
    let p_hat = successes as f64 / n as f64;
    let half = Z95 * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok(ProportionCi { successes, n, p_hat, lo: p_hat - half, hi: p_hat + half })
}

/// Mean with `± 1.96·s/√N` (sample standard deviation); zero width for `N = 1`.
pub fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z95 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub class: String,
    pub strategy: StrategyKind,
    pub n_runs: usize,
    pub trace: Vec<TracePoint>,
    pub final_mean: f64,
    pub final_median: f64,
    /// Runs whose final ratio exceeds [`GW_THRESHOLD`].
    pub gw: ProportionCi,
    /// Same against the 3-regular bound, reported for reference only.
    pub gw_3_regular: ProportionCi,
    pub frac_9999: f64,
    pub stuck_count: usize,
    pub median_iters_to_converge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub horizon: usize,
    pub groups: Vec<GroupSummary>,
}

impl SummaryStats {
    pub fn group(&self, class: &str, strategy: StrategyKind) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.class == class && g.strategy == strategy)
    }

    /// Class labels in order of first appearance.
    pub fn classes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for g in &self.groups {
            if !out.contains(&g.class.as_str()) {
                out.push(&g.class);
            }
        }
        out
    }
}

/// Groups records by (class, strategy). Traces are padded to `horizon`
/// iterations (default: the longest trace) by repeating their last value.
pub fn summarize(records: &[RunRecord], horizon: Option<usize>) -> Result<SummaryStats> {
    if records.is_empty() {
        return Err(BenchError::NoRecords);
    }
    let longest = records.iter().map(|r| r.ar_trace.len().saturating_sub(1)).max().unwrap_or(0);
    let horizon = horizon.unwrap_or(longest).max(longest);

    let mut class_order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(usize, StrategyKind), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        if r.ar_trace.is_empty() {
            return Err(BenchError::EmptyGroup(format!("{} has an empty trace", r.graph_id)));
        }
        let ci = match class_order.iter().position(|c| *c == r.class) {
            Some(i) => i,
            None => {
                class_order.push(&r.class);
                class_order.len() - 1
            }
        };
        groups.entry((ci, r.strategy)).or_default().push(r);
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((ci, strategy), runs) in groups {
        let n = runs.len();
        let mut column = vec![0.0; n];
        let trace = (0..=horizon)
            .map(|k| {
                for (slot, r) in column.iter_mut().zip(&runs) {
                    *slot = r.ar_trace[k.min(r.ar_trace.len() - 1)];
                }
                let (mean, ci_lo, ci_hi) = mean_ci(&column);
                TracePoint { iteration: k, mean, ci_lo, ci_hi, n_runs: n }
            })
            .collect();
        let finals: Vec<f64> = runs.iter().map(|r| r.final_ar).collect();
        let conv: Vec<f64> = runs.iter().map(|r| r.iters_to_converge as f64).collect();
        out.push(GroupSummary {
            class: class_order[ci].to_string(),
            strategy,
            n_runs: n,
            trace,
            final_mean: finals.iter().sum::<f64>() / n as f64,
            final_median: median(&finals),
            gw: proportion_ci(finals.iter().filter(|&&a| a > GW_THRESHOLD).count(), n)?,
            gw_3_regular: proportion_ci(finals.iter().filter(|&&a| a > GW_THRESHOLD_3_REGULAR).count(), n)?,
            frac_9999: finals.iter().filter(|&&a| a >= NEAR_OPTIMAL).count() as f64 / n as f64,
            stuck_count: runs.iter().filter(|r| r.stuck).count(),
            median_iters_to_converge: median(&conv),
        });
    }
    Ok(SummaryStats { horizon, groups: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_intervals() {
        let a = proportion_ci(134, 200).unwrap();
        assert!((a.lo * 100.0 - 60.48).abs() < 0.01 && (a.hi * 100.0 - 73.52).abs() < 0.01);
        let b = proportion_ci(99, 200).unwrap();
        assert!((b.lo * 100.0 - 42.57).abs() < 0.01 && (b.hi * 100.0 - 56.43).abs() < 0.01);
        assert!(proportion_ci(0, 0).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn z_interval_matches_textbook(n in 1usize..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as usize;
            let ci = proportion_ci(k, n).unwrap();
            let p = k as f64 / n as f64;
            let half = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
            prop_assert!((ci.lo - (p - half)).abs() < 1e-12);
            prop_assert!((ci.hi - (p + half)).abs() < 1e-12);
            prop_assert!(ci.lo <= ci.p_hat && ci.p_hat <= ci.hi);
        }

        #[test]
        fn mean_ci_brackets(values in proptest::collection::vec(0.0f64..1.0, 1..50)) {
            let (m, lo, hi) = mean_ci(&values);
            prop_assert!(lo <= m + 1e-15 && m <= hi + 1e-15);
        }
    }
}
