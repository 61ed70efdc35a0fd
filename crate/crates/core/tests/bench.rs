use std::fs;

use qwoa::bench::emit::{self, GW_HEADER, TRACE_HEADER};
use qwoa::bench::{run_suite, summarize, BenchConfig, GraphClass, RunRecord, StrategyKind};
use qwoa::optimize::{OptimizerConfig, Termination};

fn tiny(dir: &std::path::Path, workers: usize) -> BenchConfig {
    BenchConfig {
        classes: vec![GraphClass::Regular { degree: 3 }, GraphClass::Er { p_edge: 0.5 }],
        n: 6,
        instances: 3,
        depth: 8,
        strategies: StrategyKind::ALL.to_vec(),
        optimizer: OptimizerConfig { max_iters: 40, ..OptimizerConfig::default() },
        seed: 11,
        out_dir: dir.to_path_buf(),
        workers,
        ..BenchConfig::desk()
    }
}

fn record(class: &str, strategy: StrategyKind, trace: Vec<f64>) -> RunRecord {
    RunRecord {
        graph_id: format!("{class}-0"),
        class: class.into(),
        index: 0,
        n: 4,
        edges: 3,
        connected: true,
        strategy,
        depth: 2,
        seed: 0,
        q_max: 3.0,
        final_ar: *trace.last().unwrap(),
        iterations: trace.len() - 1,
        ar_trace: trace,
        termination: Termination::FTol,
        evaluations: 1,
        stuck: false,
        iters_to_converge: 0,
        wall_time: 0.0,
    }
}

#[test]
fn suite_cardinality_invariants_and_worker_independence() {
    let d1 = tempfile::tempdir().unwrap();
    let d4 = tempfile::tempdir().unwrap();
    let a = run_suite(&tiny(d1.path(), 1)).unwrap();
    let b = run_suite(&tiny(d4.path(), 4)).unwrap();
    assert!(a.failures.is_empty());
    assert_eq!(a.records.len(), 2 * 3 * 3);
    let untimed = |rs: &[RunRecord]| rs.iter().map(|r| RunRecord { wall_time: 0.0, ..r.clone() }).collect::<Vec<_>>();
    assert_eq!(untimed(&a.records), untimed(&b.records));
    for r in &a.records {
        assert_eq!(r.ar_trace.len(), r.iterations + 1);
        assert_eq!(r.final_ar, *r.ar_trace.last().unwrap());
        assert!(r.ar_trace.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(r.iterations <= 40);
    }
    let summary = summarize(&a.records, Some(40)).unwrap();
    assert_eq!(summary.groups.len(), 6);
    for g in &summary.groups {
        assert_eq!(g.trace.len(), 41);
        assert!(g.trace.windows(2).all(|w| w[1].mean >= w[0].mean - 1e-12));
        assert!(g.trace.iter().all(|p| p.ci_lo <= p.mean && p.mean <= p.ci_hi));
        assert!((0.0..=1.0).contains(&g.gw.p_hat) && (0.0..=1.0).contains(&g.frac_9999));
    }
    assert!(a.bundle_path.unwrap().exists());
}

#[test]
fn padding_carries_final_value() {
    let recs = vec![record("er", StrategyKind::Nv, vec![0.5, 0.9]), record("er", StrategyKind::Nv, vec![0.5, 0.6, 0.7, 0.8])];
    let s = summarize(&recs, Some(5)).unwrap();
    let g = s.group("er", StrategyKind::Nv).unwrap();
    let means: Vec<f64> = g.trace.iter().map(|p| p.mean).collect();
    let want = [0.5, 0.75, 0.8, 0.85, 0.85, 0.85];
    assert!(means.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{means:?}");
}

#[test]
fn identical_records_give_zero_width() {
    let recs: Vec<RunRecord> = (0..5).map(|_| record("regular", StrategyKind::Random, vec![0.7, 0.8])).collect();
    let s = summarize(&recs, None).unwrap();
    let last = s.groups[0].trace.last().unwrap();
    assert_eq!((last.mean, last.ci_lo, last.ci_hi), (0.8, 0.8, 0.8));
    assert!(summarize(&[], None).is_err());
}

#[test]
fn emit_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let recs: Vec<RunRecord> =
        StrategyKind::ALL.iter().map(|&k| record("regular", k, vec![0.6, 0.7 + 0.05 * k as usize as f64])).collect();
    let s = summarize(&recs, None).unwrap();
    assert!(emit::emit(&s, &[], dir.path().join("none")).is_err());
    assert!(!dir.path().join("none").exists());

    emit::emit(&s, &recs, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER);
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let gw = fs::read_to_string(dir.path().join("summary_gw.csv")).unwrap();
    assert_eq!(gw.lines().next().unwrap(), GW_HEADER);
    let svg = fs::read_to_string(dir.path().join("mean_trace_regular.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="mean""#).count(), 3);
    assert_eq!(svg.matches(r#"class="threshold""#).count(), 1);

    let back = emit::read_records(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(back, recs);
    let curves = emit::parse_trace_csv(&csv).unwrap();
    assert_eq!(curves, emit::curves(&s));
}
