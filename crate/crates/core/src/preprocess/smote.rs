//! SMOTE oversampling of the minority class.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::rng::counter_rng;
use crate::table::{FeatureMatrix, LabelVector};

pub const DEFAULT_K: usize = 5;

/// How the interpolation weight of each synthetic sample is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Uniform on `[0, 1)`, drawn from the sample's own stream.
    Uniform,
    /// Fixed weight for every synthetic sample.
    Fixed(f64),
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` points nearest to `points[query]`, excluding the query.
///
/// Ordered by increasing Euclidean distance; equal distances keep the lower
/// index first.
pub fn knn_minority(points: &[&[f64]], query: usize, k: usize) -> Vec<usize> {
    assert!(
        points.len() > k,
        "k-NN needs at least k + 1 = {} points, got {}",
        k + 1,
        points.len()
    );
    let q = points[query];
    let mut candidates: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, p)| (squared_distance(q, p), i))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k, by_distance);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance);
    candidates.into_iter().map(|(_, i)| i).collect()
}

/// Balances classes by appending synthetic minority rows.
///
/// Originals come first, unchanged and in order. Synthetic row `j` draws from
/// its own counter-based stream: a uniformly chosen minority base point, one
/// of its `k` nearest minority neighbours, and an interpolation weight. The
/// output is therefore independent of how many threads compute it.
pub fn smote_oversample(
    features: &FeatureMatrix,
    labels: &LabelVector,
    k: usize,
    seed: u64,
) -> Result<(FeatureMatrix, LabelVector), PreprocessError> {
    smote_oversample_with(features, labels, k, seed, Interpolation::Uniform)
}

pub fn smote_oversample_with(
    features: &FeatureMatrix,
    labels: &LabelVector,
    k: usize,
    seed: u64,
    interpolation: Interpolation,
) -> Result<(FeatureMatrix, LabelVector), PreprocessError> {
    if features.n_rows() != labels.len() {
        return Err(PreprocessError::LengthMismatch {
            features: features.n_rows(),
            labels: labels.len(),
        });
    }
    if k == 0 {
        return Err(PreprocessError::InvalidParameter("SMOTE k must be at least 1".into()));
    }
    let counts = labels.class_counts();
    if counts[0] == counts[1] {
        return Ok((features.clone(), labels.clone()));
    }
    let minority_label: u8 = if counts[1] < counts[0] { 1 } else { 0 };
    let n_minority = counts[minority_label as usize];
    let n_majority = counts[1 - minority_label as usize];
    if n_minority < 2 {
        return Err(PreprocessError::TooFewMinority(n_minority));
    }
    let k = if k > n_minority - 1 {
        log::warn!("SMOTE k = {k} exceeds minority count - 1; clamping to {}", n_minority - 1);
        n_minority - 1
    } else {
        k
    };

    let minority: Vec<&[f64]> = labels
        .iter()
        .enumerate()
        .filter(|&(_, l)| l == minority_label)
        .map(|(i, _)| features.row(i))
        .collect();
    let neighbours: Vec<Vec<usize>> = (0..n_minority)
        .into_par_iter()
        .map(|i| knn_minority(&minority, i, k))
        .collect();

    let n_synthetic = n_majority - n_minority;
    let synthetic: Vec<Vec<f64>> = (0..n_synthetic)
        .into_par_iter()
        .map(|j| {
            let mut rng = counter_rng(seed, j as u64);
            let base = rng.random_range(0..n_minority);
            let neighbour = neighbours[base][rng.random_range(0..k)];
            let lambda = match interpolation {
                Interpolation::Uniform => rng.random::<f64>(),
                Interpolation::Fixed(l) => l,
            };
            let (x, xn) = (minority[base], minority[neighbour]);
            x.iter().zip(xn).map(|(a, b)| a + lambda * (b - a)).collect()
        })
        .collect();

    let mut out_features = features.clone();
    let mut out_labels = labels.clone();
    for row in &synthetic {
        out_features.push_row(row).expect("synthetic rows share the input width");
        out_labels.push(minority_label);
    }
    Ok((out_features, out_labels))
}
