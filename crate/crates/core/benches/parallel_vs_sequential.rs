use std::hint::black_box;
use std::thread;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qwoa::bench::{run_suite, BenchConfig, GraphClass, StrategyKind};
use qwoa::graphs::{brute_force_maxcut_with, gen_regular, Graph, QualityTable};
use qwoa::liealg::{lie_closure, qwoa_generators, structure_constants_with};
use qwoa::optimize::OptimizerConfig;
use qwoa::{Exec, DEFAULT_MAX_QUBITS};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn quality_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("quality_table");
    for n in [16usize, 20] {
        let g = gen_regular(n, 3, 7).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &g, |b, g| {
                b.iter(|| QualityTable::build_with(black_box(g), DEFAULT_MAX_QUBITS, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_maxcut");
    for n in [16usize, 20] {
        let g = gen_regular(n, 3, 7).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &g, |b, g| {
                b.iter(|| brute_force_maxcut_with(black_box(g), DEFAULT_MAX_QUBITS, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn structure_constants(c: &mut Criterion) {
    let mut group = c.benchmark_group("structure_constants");
    group.sample_size(10);
    for n in [5usize, 6] {
        let table = QualityTable::build(&Graph::path(n).unwrap()).unwrap();
        let basis = lie_closure(&qwoa_generators(&table).unwrap(), 4096).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &basis, |b, basis| {
                b.iter(|| structure_constants_with(black_box(basis), exec))
            });
        }
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let dir = std::env::temp_dir().join("qwoa-bench-suite");
    let base = BenchConfig {
        classes: vec![GraphClass::Regular { degree: 3 }, GraphClass::Er { p_edge: 0.3 }],
        n: 8,
        instances: 4,
        depth: 16,
        strategies: vec![StrategyKind::Random, StrategyKind::Nv],
        optimizer: OptimizerConfig { max_iters: 30, ..OptimizerConfig::default() },
        out_dir: dir,
        ..BenchConfig::desk()
    };
    let many = thread::available_parallelism().map_or(2, |n| n.get().max(2));
    let mut group = c.benchmark_group("run_suite");
    group.sample_size(10);
    for workers in [1, many] {
        let cfg = BenchConfig { workers, ..base.clone() };
        group.bench_with_input(BenchmarkId::new("workers", workers), &cfg, |b, cfg| b.iter(|| run_suite(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, quality_table, brute_force, structure_constants, suite);
criterion_main!(benches);
