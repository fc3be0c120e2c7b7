use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tsp_bench::{blobs, with_affinity};
use tsp_core::head::loss_and_grad;
use tsp_core::kmeans::{kmeans, KMeansConfig};
use tsp_core::knn::build_knn;
use tsp_core::pipeline::{run_cluster, ClusterOptions};
use tsp_core::{DenseMatrix, Metric, Rng};

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    let x = blobs(10, 200, 64);
    for metric in [Metric::Euclidean, Metric::Cosine, Metric::Dot] {
        group.bench_with_input(BenchmarkId::from_parameter(metric), &metric, |b, &m| {
            b.iter(|| build_knn(black_box(&x), 20, m).unwrap())
        });
    }
    group.finish();
}

fn loss(c: &mut Criterion) {
    let (x, affinity) = with_affinity(blobs(10, 200, 64), 20);
    let mut rng = Rng::new(1);
    let phi =
        DenseMatrix::from_vec(10, 64, (0..640).map(|_| rng.normal() * 0.125).collect()).unwrap();
    let batch: Vec<usize> = (0..256).map(|i| i * 7 % 2000).collect();
    c.bench_function("loss_and_grad/batch256", |b| {
        b.iter(|| loss_and_grad(black_box(&phi), &x, &affinity, &batch, 3.0).unwrap())
    });
}

fn kmeans_fit(c: &mut Criterion) {
    let x = blobs(10, 200, 64);
    let config = KMeansConfig {
        n_init: 1,
        ..KMeansConfig::new(10)
    };
    c.bench_function("kmeans/one_restart", |b| {
        b.iter(|| kmeans(black_box(&x), &config, &mut Rng::new(0)).unwrap())
    });
}

fn end_to_end(c: &mut Criterion) {
    let x = blobs(10, 200, 64);
    let options = ClusterOptions::new(10);
    let mut group = c.benchmark_group("cluster");
    group.sample_size(10);
    group.bench_function("blobs2000x64", |b| {
        b.iter(|| run_cluster(black_box(&x), None, &options).unwrap())
    });
    group.finish();
}

criterion_group!(benches, knn, loss, kmeans_fit, end_to_end);
criterion_main!(benches);
