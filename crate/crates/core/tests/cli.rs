use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qwoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwoa")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qwoa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(qwoa(&[]).status.code(), Some(1));
    assert_eq!(qwoa(&["gen", "--class", "tree"]).status.code(), Some(1));
    assert_eq!(qwoa(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_2() {
    assert_eq!(qwoa(&["solve", "--graph", "/nonexistent/graph.txt"]).status.code(), Some(2));
}

#[test]
fn gen_solve_dla_gsim() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--class", "regular", "--n", "6", "--count", "2", "--degree", "3", "--seed", "4", "--out", p(dir.path())]);
    ok(&["gen", "--class", "er", "--n", "5", "--count", "1", "--p-edge", "0.5", "--seed", "4", "--out", p(dir.path())]);
    let g = dir.path().join("regular_0000.txt");
    assert!(g.exists() && dir.path().join("er_0000.txt").exists());
    let solved = ok(&["solve", "--graph", p(&g)]);
    assert!(solved.starts_with("q_max "));
    assert!(solved.lines().nth(1).unwrap().starts_with("witness "));

    let path = dir.path().join("path4.txt");
    fs::write(&path, "4 3\n0 1\n1 2\n2 3\n").unwrap();
    assert!(ok(&["solve", "--graph", p(&path)]).starts_with("q_max 3"));
    let dla = ok(&["dla", "--graph", p(&path), "--max-dim", "1000", "--structure-constants"]);
    assert!(dla.contains("round 0 2"));
    assert!(dla.lines().any(|l| l.starts_with("f ")));
    assert_eq!(qwoa(&["dla", "--graph", p(&path), "--max-dim", "3"]).status.code(), Some(2));
    let check = ok(&["gsim-check", "--graph", p(&path), "--depth", "2", "--trials", "3"]);
    assert!(check.contains("max_abs_deviation"));
}

#[test]
fn pretrain_run_stats_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bundle = d.join("bundle.json");
    ok(&["pretrain", "--n", "4", "--depth", "4", "--seed", "1", "--out", p(&bundle)]);
    let graph = d.join("c4.txt");
    fs::write(&graph, "4 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    for (strategy, extra) in [("random", vec![]), ("pretrained", vec!["--bundle", p(&bundle)]), ("nv", vec!["--nv-binding", "literal"])] {
        let out = d.join(format!("{strategy}.json"));
        let mut args = vec!["run", "--graph", p(&graph), "--strategy", strategy, "--depth", "4", "--max-iters", "30", "--seed", "2", "--out", p(&out)];
        args.extend(extra);
        ok(&args);
        let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(rec["strategy"], strategy);
    }
    let missing = qwoa(&["run", "--graph", p(&graph), "--strategy", "pretrained", "--depth", "4", "--max-iters", "5", "--seed", "1", "--out", p(&d.join("x.json"))]);
    assert_ne!(missing.status.code(), Some(0));

    let cfg = d.join("bench.toml");
    let out_dir = d.join("suite");
    fs::write(
        &cfg,
        format!(
            "n = 5\ninstances = 2\ndepth = 3\nstrategies = [\"random\", \"nv\"]\nseed = 3\nout_dir = {:?}\n[[classes]]\nkind = \"er\"\np_edge = 0.6\n[optimizer]\nmax_iters = 20\n",
            p(&out_dir)
        ),
    )
    .unwrap();
    ok(&["bench", "--config", p(&cfg), "--workers", "2"]);
    for f in ["records.jsonl", "summary.csv", "summary_gw.csv", "mean_trace_er.svg", "timings.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let csv = d.join("stats.csv");
    ok(&["stats", "--in", p(&out_dir), "--out", p(&csv)]);
    assert!(d.join("stats_gw.csv").exists());
    let svg = d.join("plot.svg");
    ok(&["plot", "--in", p(&csv), "--out", p(&svg)]);
    assert_eq!(fs::read_to_string(&svg).unwrap().matches(r#"class="mean""#).count(), 2);
}
