use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;

use qwoa::bench::{self, emit, BenchConfig, GraphLabel, Strategy, StrategyKind};
use qwoa::graphs::{brute_force_maxcut, gen_er, gen_regular, Graph, QualityTable};
use qwoa::liealg::{self, AlgebraElement, GSim};
use qwoa::optimize::OptimizerConfig;
use qwoa::rng;
use qwoa::simulator::{expectation, run_pqc, CircuitSpec, ParameterSet};
use qwoa::strategies::{pretrain_path_graph, NvBinding, PretrainBundle};

const GSIM_SEED: u64 = 0x6573_696d;
const GSIM_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "qwoa", version, about = "QWOA / NV-QWOA MaxCut benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Er,
    Regular,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Pretrained,
    Nv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BindingArg {
    Named,
    Literal,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random graphs into a directory.
    Gen {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0.3)]
        p_edge: f64,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact MaxCut by enumeration.
    Solve {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Pretrain QWOA on the path graph and save the bundle.
    Pretrain {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
    },
    /// Train one strategy on one graph; writes the run record as JSON.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        max_iters: usize,
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "named")]
        nv_binding: BindingArg,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite from a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Summarize `records.jsonl` in a directory into CSV.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a summary CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dynamical Lie algebra of the QWOA generators for a graph.
    Dla {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = liealg::DEFAULT_MAX_DIM)]
        max_dim: usize,
        #[arg(long)]
        structure_constants: bool,
    },
    /// Compare g-sim against the statevector on random parameters.
    GsimCheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        trials: usize,
    },
}

enum Outcome {
    Done,
    Partial,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.cmd) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> anyhow::Result<Outcome> {
    match cmd {
        Cmd::Gen { class, n, count, p_edge, degree, seed, out } => gen(class, n, count, p_edge, degree, seed, &out),
        Cmd::Solve { graph } => {
            let g = Graph::read_file(&graph)?;
            let sol = brute_force_maxcut(&g)?;
            let bits: String = sol.witness_bits().iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("q_max {}", sol.q_max);
            println!("witness {bits}");
            Ok(Outcome::Done)
        }
        Cmd::Pretrain { n, depth, seed, out, max_iters } => {
            let opt = OptimizerConfig { max_iters, ..OptimizerConfig::default() };
            let b = pretrain_path_graph(n, depth, seed, &opt)?;
            b.save(&out)?;
            println!("aux_approx_ratio {} attempts {}", b.aux_approx_ratio, b.attempts);
            Ok(Outcome::Done)
        }
        Cmd::Run { graph, strategy, depth, max_iters, bundle, nv_binding, seed, out } => {
            let g = Graph::read_file(&graph)?;
            let kind = match strategy {
                StrategyArg::Random => StrategyKind::Random,
                StrategyArg::Pretrained => StrategyKind::Pretrained,
                StrategyArg::Nv => StrategyKind::Nv,
            };
            let binding = match nv_binding {
                BindingArg::Named => NvBinding::Named,
                BindingArg::Literal => NvBinding::Literal,
            };
            let mut s = Strategy::new(kind).with_binding(binding);
            match (kind, bundle) {
                (_, Some(path)) => s = s.with_bundle(Arc::new(PretrainBundle::load(&path)?)),
                (StrategyKind::Pretrained, None) => bail!("--strategy pretrained requires --bundle"),
                _ => {}
            }
            let id = graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let label = GraphLabel { graph_id: id, class: "file".into(), index: 0 };
            let opt = OptimizerConfig { max_iters, ..OptimizerConfig::default() };
            let rec = bench::run_instance(&g, label, &s, depth, &opt, seed)?;
            fs::write(&out, serde_json::to_string(&rec)? + "\n")?;
            println!("final_ar {} iterations {} termination {:?}", rec.final_ar, rec.iterations, rec.termination);
            Ok(Outcome::Done)
        }
        Cmd::Bench { config, workers } => run_bench(&config, workers),
        Cmd::Stats { input, out } => {
            let records = emit::read_records(input.join(emit::RECORDS_FILE))?;
            let summary = bench::summarize(&records, None)?;
            emit::write_summary(&summary, &out)?;
            Ok(Outcome::Done)
        }
        Cmd::Plot { input, out } => {
            let curves = emit::parse_trace_csv(&fs::read_to_string(&input)?)?;
            fs::write(&out, emit::render_svg(&curves))?;
            Ok(Outcome::Done)
        }
        Cmd::Dla { graph, max_dim, structure_constants } => dla(&graph, max_dim, structure_constants),
        Cmd::GsimCheck { graph, depth, trials } => gsim_check(&graph, depth, trials),
    }
}

fn gen(class: ClassArg, n: usize, count: usize, p_edge: f64, degree: usize, seed: u64, out: &Path) -> anyhow::Result<Outcome> {
    fs::create_dir_all(out)?;
    let label = match class {
        ClassArg::Er => "er",
        ClassArg::Regular => "regular",
    };
    for i in 0..count {
        let s = rng::derive_seed(seed, "gen", &[i as u64]);
        let g = match class {
            ClassArg::Er => gen_er(n, p_edge, s)?,
            ClassArg::Regular => gen_regular(n, degree, s)?,
        };
        g.write_file(out.join(format!("{label}_{i:04}.txt")))?;
    }
    Ok(Outcome::Done)
}

fn run_bench(config: &Path, workers: Option<usize>) -> anyhow::Result<Outcome> {
    let mut cfg = BenchConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let outcome = bench::run_suite(&cfg)?;
    for f in &outcome.failures {
        eprintln!("failed: {} {} {}", f.graph_id, f.strategy, f.error);
    }
    if outcome.records.is_empty() {
        bail!("every run failed");
    }
    let summary = bench::summarize(&outcome.records, Some(cfg.optimizer.max_iters))?;
    emit::emit(&summary, &outcome.records, &cfg.out_dir)?;
    let mut timings = String::from("graph_id,strategy,wall_time_s\n");
    for r in &outcome.records {
        let _ = writeln!(timings, "{},{},{:.6}", r.graph_id, r.strategy, r.wall_time);
    }
    fs::write(cfg.out_dir.join("timings.csv"), timings)?;
    for g in &summary.groups {
        println!(
            "{:<8} {:<10} runs {:>3}  final mean {:.4}  median iters-to-converge {:>5.1}  gw {:.3} [{:.3}, {:.3}]  >=0.9999 {:.3}  stuck {}",
            g.class, g.strategy, g.n_runs, g.final_mean, g.median_iters_to_converge, g.gw.p_hat, g.gw.lo, g.gw.hi, g.frac_9999, g.stuck_count
        );
    }
    Ok(if outcome.failures.is_empty() { Outcome::Done } else { Outcome::Partial })
}

fn dla(graph: &Path, max_dim: usize, with_f: bool) -> anyhow::Result<Outcome> {
    let g = Graph::read_file(graph)?;
    let table = QualityTable::build(&g)?;
    let gens = liealg::qwoa_generators(&table)?;
    let basis = liealg::lie_closure(&gens, max_dim)?;
    println!("n {}", g.n());
    println!("generators {}", gens.len());
    for (round, size) in basis.round_sizes().iter().enumerate() {
        println!("round {round} {size}");
    }
    println!("dimension {}", basis.dim());
    if with_f {
        let f = liealg::structure_constants(&basis);
        println!("structure_constants gamma alpha beta value");
        for c in 0..f.dim() {
            for a in 0..f.dim() {
                for b in 0..f.dim() {
                    let v = f.get(c, a, b);
                    if v.abs() > 1e-12 {
                        println!("f {c} {a} {b} {v:.16e}");
                    }
                }
            }
        }
    }
    Ok(Outcome::Done)
}

fn gsim_check(graph: &Path, depth: usize, trials: usize) -> anyhow::Result<Outcome> {
    let g = Graph::read_file(graph)?;
    let table = Arc::new(QualityTable::build(&g)?);
    let basis = liealg::lie_closure(&liealg::qwoa_generators(&table)?, liealg::DEFAULT_MAX_DIM)?;
    let f = liealg::structure_constants(&basis);
    let circuit = CircuitSpec::qwoa(table.clone(), depth);
    let sim = GSim::new(&circuit, &basis, &f)?;
    let observable = AlgebraElement::from_diagonal(&table)?;
    let e0 = basis.uniform_initial_expectations();
    let mut rng = rng::stream(GSIM_SEED, "gsim-check", &[depth as u64]);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let params = ParameterSet((0..circuit.num_params()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect());
        let lie = sim.expectation(&params, &observable, &e0)?;
        let sv = expectation(&run_pqc(&circuit, &params)?, &table)?;
        worst = worst.max((lie - sv).abs());
    }
    println!("dimension {}", basis.dim());
    println!("trials {trials}");
    println!("max_abs_deviation {worst:.3e}");
    if worst > GSIM_TOL {
        bail!("g-sim deviates from the statevector by {worst:.3e} (tolerance {GSIM_TOL:e})");
    }
    Ok(Outcome::Done)
}
