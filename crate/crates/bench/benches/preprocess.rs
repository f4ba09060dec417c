use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tabvote_bench::imbalanced;
use tabvote_core::preprocess::{fit_scaler, smote_oversample, stratified_split};

fn smote(c: &mut Criterion) {
    let mut group = c.benchmark_group("smote");
    for n_rows in [1_000, 6_400] {
        let (x, y) = imbalanced(n_rows, 10, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n_rows), &n_rows, |b, _| {
            b.iter(|| smote_oversample(black_box(&x), black_box(&y), 5, 7).unwrap())
        });
    }
    group.finish();
}

fn split_and_scale(c: &mut Criterion) {
    let (x, y) = imbalanced(8_000, 10, 4);
    c.bench_function("stratified_split/8000", |b| {
        b.iter(|| stratified_split(black_box(&y), 0.2, 11).unwrap())
    });
    c.bench_function("fit_scaler/8000", |b| b.iter(|| fit_scaler(black_box(&x))));
}

criterion_group!(benches, smote, split_and_scale);
criterion_main!(benches);
