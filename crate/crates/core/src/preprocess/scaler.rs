use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::table::FeatureMatrix;

/// Guard applied to the divisor of constant features.
pub const STD_EPSILON: f64 = 1e-12;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(features: &FeatureMatrix) -> Result<ScalerParams, PreprocessError> {
    let n = features.n_rows();
    if n == 0 {
        return Err(PreprocessError::EmptyInput);
    }
    let d = features.n_features();
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    for j in 0..d {
        let column = features.column(j);
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo == hi {
            // exact for constant columns, so they scale to exactly zero
            mean[j] = lo;
            continue;
        }
        let m = column.iter().sum::<f64>() / n as f64;
        let var = column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        mean[j] = m;
        std[j] = var.sqrt();
    }
    Ok(ScalerParams { mean, std })
}

pub fn apply_scaler(params: &ScalerParams, features: &FeatureMatrix) -> Result<FeatureMatrix, PreprocessError> {
    let d = features.n_features();
    if d != params.mean.len() {
        return Err(PreprocessError::DimensionMismatch {
            expected: params.mean.len(),
            found: d,
        });
    }
    let values = features
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let j = i % d;
            (v - params.mean[j]) / params.std[j].max(STD_EPSILON)
        })
        .collect();
    Ok(FeatureMatrix::new(values, features.n_rows(), features.feature_names().to_vec())
        .expect("shape preserved"))
}
