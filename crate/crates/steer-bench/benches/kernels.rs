//! Hot-path benchmarks: logit filtering, guidance arithmetic, hull
//! membership, and the builtin embedder.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use steer_bench::{point_cloud, random_log_probs, sample_corpus};
use steer_core::decoding::nucleus_filter;
use steer_core::embeddings::{embed_builtin, EmbedderConfig};
use steer_core::guidance::{
    contrastive_expert_guidance, interpolate_negative, steer_combine,
};
use steer_core::metrics::hull_residual;

fn bench_nucleus_filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("nucleus_filter");
    for dim in [64usize, 1024, 16384] {
        let logp = random_log_probs(dim, 7);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &logp, |b, logp| {
            b.iter(|| nucleus_filter(black_box(logp), 0.95).unwrap());
        });
    }
    group.finish();
}

fn bench_steer_arithmetic(c: &mut Criterion) {
    let mut group = c.benchmark_group("steer_arithmetic");
    for dim in [64usize, 1024, 16384] {
        let domain = random_log_probs(dim, 1);
        let base = random_log_probs(dim, 2);
        let cond = random_log_probs(dim, 3);
        let uncond = random_log_probs(dim, 4);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| {
                let ceg = contrastive_expert_guidance(
                    black_box(&domain),
                    black_box(&base),
                    0.4,
                )
                .unwrap();
                let np =
                    interpolate_negative(black_box(&cond), black_box(&uncond), 0.4).unwrap();
                steer_combine(&ceg, &np).unwrap()
            });
        });
    }
    group.finish();
}

fn bench_hull_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("hull_residual");
    for (n, dim) in [(50usize, 5usize), (200, 5), (200, 16)] {
        let set = point_cloud(n, dim, 11);
        let query = point_cloud(1, dim, 12).pop().unwrap();
        let id = format!("{n}pts_{dim}d");
        group.bench_with_input(BenchmarkId::from_parameter(id), &set, |b, set| {
            b.iter(|| hull_residual(black_box(set), black_box(&query)).unwrap());
        });
    }
    group.finish();
}

fn bench_builtin_embedder(c: &mut Criterion) {
    let corpus = sample_corpus(64, 21);
    let config = EmbedderConfig::default();
    c.bench_function("embed_builtin_64_texts", |b| {
        b.iter(|| {
            for text in &corpus {
                black_box(embed_builtin(black_box(text), &config).unwrap());
            }
        });
    });
}

criterion_group!(
    benches,
    bench_nucleus_filter,
    bench_steer_arithmetic,
    bench_hull_residual,
    bench_builtin_embedder
);
criterion_main!(benches);
