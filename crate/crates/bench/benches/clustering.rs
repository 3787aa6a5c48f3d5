use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use probclust_bench::{mixture, point_spaces};
use probclust_core::{
    check_metric_axioms, cluster, fit_max_prob_space, random_spaces, space_space_distance,
    EngineConfig, SdlConfig,
};

fn distances(c: &mut Criterion) {
    let spaces = point_spaces(2, 18);
    c.bench_function("space_space_distance/18d", |b| {
        b.iter(|| space_space_distance(black_box(&spaces[0]), black_box(&spaces[1])))
    });
    let random = random_spaces(50, 18, 0).unwrap();
    c.bench_function("check_metric_axioms/50x18/1000", |b| {
        b.iter(|| check_metric_axioms(black_box(&random), 1000, 0))
    });
}

fn fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_max_prob_space");
    for n in [1_000, 10_000] {
        let points = mixture(n, 18, 2);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, p| {
            b.iter(|| fit_max_prob_space(p, &SdlConfig::default()))
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster");
    group.sample_size(10);
    for (n, dim) in [(2_000, 2), (10_000, 18)] {
        let points = mixture(n, dim, 3);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &points, |b, p| {
            b.iter(|| cluster(p, &EngineConfig::default()))
        });
    }
    group.finish();
}

criterion_group!(benches, distances, fit, pipeline);
criterion_main!(benches);
