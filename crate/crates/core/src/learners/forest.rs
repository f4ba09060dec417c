use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{CartBuilder, MaxFeatures, TreeHyper, TreeModel};
use super::{check_fit_input, check_width, Classifier, LearnerError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    /// Disabling the bootstrap trains every tree on the full sample.
    pub bootstrap: bool,
    /// Worker threads; `None` uses the global rayon pool. Results do not
    /// depend on this setting.
    pub n_threads: Option<usize>,
}

impl Default for ForestHyper {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            n_threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed of each tree's stream, derived from the fit seed and tree index.
    pub tree_seeds: Vec<u64>,
    pub n_features: usize,
}

fn fit_one(x: &FeatureMatrix, y: &LabelVector, hyper: &ForestHyper, tree_seed: u64) -> TreeModel {
    let tree_hyper = TreeHyper {
        max_depth: hyper.max_depth,
        min_samples_leaf: hyper.min_samples_leaf,
        max_features: hyper.max_features,
    };
    let builder = CartBuilder {
        x,
        y: y.as_slice(),
        hyper: &tree_hyper,
        n_candidates: hyper.max_features.resolve(x.n_features()),
    };
    let mut rng = rng_from_seed(tree_seed);
    let n = x.n_rows();
    let samples: Vec<usize> = if hyper.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    TreeModel {
        root: builder.build(samples, 0, &mut rng),
        n_features: x.n_features(),
    }
}

/// Bagged CART trees with per-node feature subsampling.
pub fn fit_forest(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &ForestHyper,
    seed: u64,
) -> Result<ForestModel, LearnerError> {
    check_fit_input(x, y)?;
    if hyper.n_trees == 0 {
        return Err(LearnerError::InvalidHyper("n_trees must be at least 1".into()));
    }
    TreeHyper {
        max_depth: hyper.max_depth,
        min_samples_leaf: hyper.min_samples_leaf,
        max_features: hyper.max_features,
    }
    .validate()?;
    let tree_seeds: Vec<u64> = (0..hyper.n_trees as u64).map(|t| derive_seed(seed, t)).collect();
    let grow = || -> Vec<TreeModel> {
        tree_seeds
            .par_iter()
            .map(|&s| fit_one(x, y, hyper, s))
            .collect()
    };
    let trees = match hyper.n_threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LearnerError::InvalidHyper(format!("thread pool: {e}")))?
            .install(grow),
        None => grow(),
    };
    Ok(ForestModel {
        trees,
        tree_seeds,
        n_features: x.n_features(),
    })
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_features, x)?;
        let n_trees = self.trees.len() as f64;
        Ok(x.rows()
            .map(|row| self.trees.iter().map(|t| t.root.predict(row)).sum::<f64>() / n_trees)
            .collect())
    }
}
