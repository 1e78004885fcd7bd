//! Sequential vs parallel throughput of the map/reduce pipelines and the
//! Monte Carlo trial loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dimsum_core::engine::ExecMode;
use dimsum_core::generate::{generate_random_sparse, ValueDist};
use dimsum_core::matrix::column_stats;
use dimsum_core::pipelines::{run_naive, run_sampled, PipelineOptions, SamplingConfig};
use dimsum_core::verify::check_moment_bounds;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn bench_naive(c: &mut Criterion) {
    let mut group = c.benchmark_group("naive_pipeline");
    group.sample_size(20);
    for rows in [2_000usize, 20_000] {
        let matrix = generate_random_sparse(rows, 40, 8, ValueDist::Uniform01, 7).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, rows), &matrix, |b, m| {
                b.iter(|| black_box(run_naive(m, exec)));
            });
        }
    }
    group.finish();
}

fn bench_sampled(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampled_pipeline");
    group.sample_size(20);
    for rows in [2_000usize, 20_000] {
        let matrix = generate_random_sparse(rows, 40, 8, ValueDist::Binary, 11).unwrap();
        let stats = column_stats(&matrix).unwrap();
        let cfg = SamplingConfig::dimsum(64.0).unwrap();
        for (name, exec) in MODES {
            let opts = PipelineOptions {
                exec,
                exact_diagonal: false,
            };
            group.bench_with_input(BenchmarkId::new(name, rows), &matrix, |b, m| {
                b.iter(|| black_box(run_sampled(m, &stats, &cfg, 3, &opts)));
            });
        }
    }
    group.finish();
}

fn bench_trial_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_suite_trials");
    group.sample_size(10);
    let matrix = generate_random_sparse(500, 20, 5, ValueDist::Binary, 13).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(check_moment_bounds(&matrix, 25.0, 200, 1, exec).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_naive, bench_sampled, bench_trial_loop);
criterion_main!(benches);
