use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxstream_bench::{sample_max_path, zigzag};
use maxstream_core::models::ProcessModel;
use maxstream_core::skorokhod::{d_j1, d_m1, osc_j1, osc_m1};

fn oscillations(c: &mut Criterion) {
    let mut group = c.benchmark_group("oscillation");
    for k in [8, 32, 128] {
        let f = zigzag(k, 1.0);
        group.bench_with_input(BenchmarkId::new("m1", k), &f, |b, f| b.iter(|| osc_m1(black_box(f), 0.1)));
        group.bench_with_input(BenchmarkId::new("j1", k), &f, |b, f| b.iter(|| osc_j1(black_box(f), 0.1)));
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metric");
    for k in [4, 16, 64] {
        let f = zigzag(k, 1.0);
        let g = zigzag(k + 1, 0.8);
        group.bench_with_input(BenchmarkId::new("d_m1", k), &(&f, &g), |b, (f, g)| b.iter(|| d_m1(f, g, 1e-6)));
        group.bench_with_input(BenchmarkId::new("d_j1", k), &(&f, &g), |b, (f, g)| b.iter(|| d_j1(f, g, 1e-6)));
    }
    let (p, q) = (sample_max_path(10_000, 1), sample_max_path(10_000, 2));
    group.bench_function("d_m1_max_paths", |b| b.iter(|| d_m1(&p, &q, 1e-6)));
    group.finish();
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_1e4");
    for model in [
        ProcessModel::iid(1.0, 1.0).unwrap(),
        ProcessModel::moving_maxima(vec![0.2, 0.3, 0.5]).unwrap(),
        ProcessModel::armax(0.5).unwrap(),
        ProcessModel::squared_garch(0.1, 0.1, 0.8).unwrap(),
    ] {
        group.bench_function(model.name(), |b| b.iter(|| model.generate(black_box(10_000), 7)));
    }
    group.finish();
}

criterion_group!(benches, oscillations, metrics, generation);
criterion_main!(benches);
