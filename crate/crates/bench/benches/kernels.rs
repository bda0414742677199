use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use propml_bench::{dataset, label_sets, uniform};
use propml_core::corrupt::corrupt_flip;
use propml_core::loss::LossConfig;
use propml_core::metrics::MetricReport;
use propml_core::model::{backward, forward, init_model, train, TrainConfig};
use propml_core::tensor::{matmul, matmul_tn};
use propml_core::CandidateOverlay;

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for width in [32, 128, 256] {
        let a = uniform(128, width, 1);
        let b = uniform(width, width, 2);
        group.bench_with_input(BenchmarkId::new("nn", width), &width, |bench, _| {
            bench.iter(|| matmul(black_box(&a), black_box(&b)).unwrap())
        });
        let g = uniform(128, width, 3);
        group.bench_with_input(BenchmarkId::new("tn", width), &width, |bench, _| {
            bench.iter(|| matmul_tn(black_box(&a), black_box(&g)).unwrap())
        });
    }
    group.finish();
}

fn bench_loss(c: &mut Criterion) {
    let logits = uniform(128, 80, 4);
    let s = label_sets(128, 80, 5);
    let propml = LossConfig::propml(0.35);
    let bce = LossConfig::bce();
    c.bench_function("loss/propml 128x80", |b| {
        b.iter(|| propml.evaluate(black_box(&logits), black_box(&s)).unwrap())
    });
    c.bench_function("loss/bce 128x80", |b| {
        b.iter(|| bce.evaluate(black_box(&logits), black_box(&s)).unwrap())
    });
}

fn bench_step(c: &mut Criterion) {
    let ds = dataset(128, 50);
    let s = CandidateOverlay::clean(&ds).candidates;
    let model = init_model([50, 256, 256, 10], 1).unwrap();
    let loss = LossConfig::propml(0.5);
    c.bench_function("mlp/forward+backward batch 128, 256x256", |b| {
        b.iter(|| {
            let (logits, cache) = forward(&model, ds.features()).unwrap();
            let grad = loss.evaluate(&logits, &s).unwrap().grad_logits;
            backward(&model, &cache, &grad).unwrap()
        })
    });
}

fn bench_train(c: &mut Criterion) {
    let ds = dataset(1000, 50);
    let overlay = corrupt_flip(&ds, 0.2, 3).unwrap();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let config = TrainConfig {
        hidden: [32, 32],
        epochs: 5,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("5 epochs, 1000 instances, 32x32", |b| {
        b.iter(|| train(&ds, &overlay, &idx, &config).unwrap())
    });
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let probs = uniform(2000, 10, 6).map(|v| 0.5 + 0.5 * v);
    let truths = label_sets(2000, 10, 7);
    c.bench_function("metrics/all 2000x10", |b| {
        b.iter(|| MetricReport::evaluate(black_box(&probs), black_box(&truths)).unwrap())
    });
}

criterion_group!(benches, bench_matmul, bench_loss, bench_step, bench_train, bench_metrics);
criterion_main!(benches);
