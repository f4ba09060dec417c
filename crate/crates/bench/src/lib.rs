//! Deterministic fixtures shared by the benchmarks.

use rand::Rng as _;
use tabvote_core::rng::rng_from_seed;
use tabvote_core::{FeatureMatrix, LabelVector};

/// Standardized-looking features with a 4:1 class imbalance; the positive
/// class is shifted along every axis so learners have signal to find.
pub fn imbalanced(n_rows: usize, n_features: usize, seed: u64) -> (FeatureMatrix, LabelVector) {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n_rows);
    let mut labels = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let label = u8::from(i % 5 == 0);
        let shift = if label == 1 { 0.8 } else { 0.0 };
        rows.push((0..n_features).map(|_| rng.random_range(-1.5..1.5) + shift).collect::<Vec<f64>>());
        labels.push(label);
    }
    (
        FeatureMatrix::from_rows(&rows).expect("rectangular rows"),
        LabelVector::new(labels).expect("binary labels"),
    )
}

/// Random binary label pairs of length `n`.
pub fn label_pair(n: usize, seed: u64) -> (LabelVector, LabelVector) {
    let mut rng = rng_from_seed(seed);
    let mut draw = || LabelVector::new((0..n).map(|_| u8::from(rng.random_bool(0.3))).collect()).expect("binary labels");
    (draw(), draw())
}
