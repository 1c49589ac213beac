use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kcycles::ensemble::{sample_matrix, EnsembleConfig, EntryDistribution};
use kcycles::harness::run_cell;
use kcycles::lap::LapSolver;
use kcycles::Execution;

fn cell_sequential_vs_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("cell");
    group.sample_size(10);
    for n in [40, 100] {
        let cfg = EnsembleConfig::new(n, 0.0, EntryDistribution::Uniform01, 512, 1).unwrap();
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| {
                b.iter(|| black_box(run_cell(cfg, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn single_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for n in [100, 200, 400] {
        for lambda in [-1.0, 0.0, 1.0] {
            let m = sample_matrix(&EnsembleConfig::new(n, lambda, EntryDistribution::Uniform01, 1, 3).unwrap(), 0);
            let mut solver = LapSolver::new();
            group.bench_with_input(BenchmarkId::new(format!("lambda={lambda}"), n), &m, |b, m| {
                b.iter(|| black_box(solver.solve(m).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, cell_sequential_vs_parallel, single_solve);
criterion_main!(benches);
