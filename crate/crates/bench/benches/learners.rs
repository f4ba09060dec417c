use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tabvote_bench::imbalanced;
use tabvote_core::learners::{fit_forest, fit_gbt, fit_mlp, ForestHyper, GbtHyper, MlpHyper};
use tabvote_core::Classifier;

fn forest(c: &mut Criterion) {
    let (x, y) = imbalanced(2_000, 10, 5);
    let hyper = ForestHyper {
        n_trees: 20,
        ..Default::default()
    };
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("fit/2000x10/20_trees", |b| {
        b.iter(|| fit_forest(black_box(&x), black_box(&y), &hyper, 1).unwrap())
    });
    let model = fit_forest(&x, &y, &hyper, 1).unwrap();
    group.bench_function("predict/2000x10", |b| b.iter(|| model.predict_proba(black_box(&x)).unwrap()));
    group.finish();
}

fn gbt(c: &mut Criterion) {
    let (x, y) = imbalanced(2_000, 10, 6);
    let hyper = GbtHyper {
        n_rounds: 20,
        ..GbtHyper::xgb_like()
    };
    let mut group = c.benchmark_group("gbt");
    group.sample_size(10);
    group.bench_function("fit/2000x10/20_rounds", |b| {
        b.iter(|| fit_gbt(black_box(&x), black_box(&y), &hyper, 1).unwrap())
    });
    group.finish();
}

fn mlp_epoch(c: &mut Criterion) {
    let (x, y) = imbalanced(6_400, 10, 7);
    let hyper = MlpHyper {
        max_epochs: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("mlp");
    group.sample_size(10);
    group.bench_function("one_epoch/6400x10", |b| {
        b.iter(|| fit_mlp(black_box(&x), black_box(&y), &hyper, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, forest, gbt, mlp_epoch);
criterion_main!(benches);
