//! CART classification trees with Gini impurity.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{check_fit_input, check_width, Classifier, LearnerError};
use crate::rng::{rng_from_seed, Rng};
use crate::table::{FeatureMatrix, LabelVector};

/// Trees nest in JSON and serde_json refuses very deep documents, so depth
/// is capped well below its recursion limit.
pub const MAX_TREE_DEPTH: usize = 40;

/// Binary tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        match self {
            TreeNode::Leaf { .. } => vec![self],
            TreeNode::Split { left, right, .. } => {
                let mut out = left.leaves();
                out.extend(right.leaves());
                out
            }
        }
    }
}

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(d))`
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeHyper {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeHyper {
    pub(crate) fn validate(&self) -> Result<(), LearnerError> {
        if self.max_depth > MAX_TREE_DEPTH {
            return Err(LearnerError::InvalidHyper(format!(
                "max_depth {} exceeds {MAX_TREE_DEPTH}",
                self.max_depth
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(LearnerError::InvalidHyper("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub n_features: usize,
}

impl Classifier for TreeModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_features, x)?;
        Ok(x.rows().map(|r| self.root.predict(r)).collect())
    }
}

/// Gini impurity `1 - p0^2 - p1^2` of a node holding `ones` positives out of `n`.
pub fn gini(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Size-weighted Gini impurity of a two-way split.
pub fn weighted_gini(left_ones: usize, left_n: usize, right_ones: usize, right_n: usize) -> f64 {
    let n = (left_n + right_n) as f64;
    (left_n as f64 * gini(left_ones, left_n) + right_n as f64 * gini(right_ones, right_n)) / n
}

/// Midpoint between consecutive distinct values, never rounding onto `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

pub(crate) struct CartBuilder<'a> {
    pub x: &'a FeatureMatrix,
    pub y: &'a [u8],
    pub hyper: &'a TreeHyper,
    pub n_candidates: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl CartBuilder<'_> {
    /// Grows a tree over `samples` (row indices, duplicates allowed).
    pub fn build(&self, samples: Vec<usize>, depth: usize, rng: &mut Rng) -> TreeNode {
        let n = samples.len();
        let ones = samples.iter().filter(|&&i| self.y[i] == 1).count();
        let leaf = TreeNode::Leaf {
            value: if n == 0 { 0.0 } else { ones as f64 / n as f64 },
            samples: n,
        };
        if depth >= self.hyper.max_depth
            || ones == 0
            || ones == n
            || n < 2 * self.hyper.min_samples_leaf
        {
            return leaf;
        }
        let features = self.candidate_features(rng);
        let Some(choice) = self.best_split(&samples, &features) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x.get(i, choice.feature) <= choice.threshold);
        TreeNode::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: Box::new(self.build(left, depth + 1, rng)),
            right: Box::new(self.build(right, depth + 1, rng)),
        }
    }

    fn candidate_features(&self, rng: &mut Rng) -> Vec<usize> {
        let d = self.x.n_features();
        if self.n_candidates >= d {
            return (0..d).collect();
        }
        let mut features = index::sample(rng, d, self.n_candidates).into_vec();
        features.sort_unstable();
        features
    }

    /// Lowest weighted Gini; ties keep the lower feature, then the lower threshold.
    fn best_split(&self, samples: &[usize], features: &[usize]) -> Option<SplitChoice> {
        let n = samples.len();
        let total_ones = samples.iter().filter(|&&i| self.y[i] == 1).count();
        let min_leaf = self.hyper.min_samples_leaf;
        let mut best: Option<SplitChoice> = None;
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(n);
        for &feature in features {
            sorted.clear();
            sorted.extend(samples.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_ones = 0;
            for k in 1..n {
                left_ones += sorted[k - 1].1 as usize;
                if sorted[k - 1].0 == sorted[k].0 || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let impurity = weighted_gini(left_ones, k, total_ones - left_ones, n - k);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(SplitChoice {
                        feature,
                        threshold: midpoint(sorted[k - 1].0, sorted[k].0),
                        impurity,
                    });
                }
            }
        }
        best
    }
}

pub fn fit_tree(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &TreeHyper,
    seed: u64,
) -> Result<TreeModel, LearnerError> {
    check_fit_input(x, y)?;
    hyper.validate()?;
    let builder = CartBuilder {
        x,
        y: y.as_slice(),
        hyper,
        n_candidates: hyper.max_features.resolve(x.n_features()),
    };
    let mut rng = rng_from_seed(seed);
    let root = builder.build((0..x.n_rows()).collect(), 0, &mut rng);
    Ok(TreeModel {
        root,
        n_features: x.n_features(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[&[f64]], labels: &[u8]) -> (FeatureMatrix, LabelVector) {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        (
            FeatureMatrix::from_rows(&rows).unwrap(),
            LabelVector::new(labels.to_vec()).unwrap(),
        )
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let (x, y) = data(&[&[0.0], &[1.0], &[2.0]], &[1, 1, 1]);
        let tree = fit_tree(&x, &y, &TreeHyper::default(), 0).unwrap();
        assert_eq!(tree.root, TreeNode::Leaf { value: 1.0, samples: 3 });
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = data(
            &[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]],
            &[0, 1, 1, 0],
        );
        let tree = fit_tree(&x, &y, &TreeHyper::default(), 0).unwrap();
        assert_eq!(tree.predict(&x, 0.5).unwrap(), y);
        assert_eq!(tree.root.depth(), 2);
        let stump = fit_tree(&x, &y, &TreeHyper { max_depth: 1, ..Default::default() }, 0).unwrap();
        assert_ne!(stump.predict(&x, 0.5).unwrap(), y);
    }

    #[test]
    fn pure_children_have_zero_impurity() {
        assert_eq!(weighted_gini(2, 2, 0, 2), 0.0);
        assert_eq!(gini(1, 2), 0.5);
        assert!((weighted_gini(1, 2, 1, 3) - (2.0 * 0.5 + 3.0 * (4.0 / 9.0)) / 5.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_midpoint_and_ties_prefer_lower_feature() {
        // both features separate perfectly; feature 0 must win
        let (x, y) = data(&[&[1.0, 10.0], &[3.0, 30.0], &[5.0, 50.0], &[7.0, 70.0]], &[0, 0, 1, 1]);
        let tree = fit_tree(&x, &y, &TreeHyper::default(), 0).unwrap();
        match tree.root {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 4.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let (x, y) = data(&[&[0.0], &[1.0], &[2.0], &[3.0], &[4.0]], &[1, 0, 0, 0, 0]);
        let hyper = TreeHyper {
            min_samples_leaf: 2,
            ..Default::default()
        };
        let tree = fit_tree(&x, &y, &hyper, 0).unwrap();
        assert!(tree.root.leaves().iter().all(|l| matches!(l, TreeNode::Leaf { samples, .. } if *samples >= 2)));
    }

    #[test]
    fn constant_features_give_leaf() {
        let (x, y) = data(&[&[1.0], &[1.0], &[1.0]], &[1, 0, 1]);
        let tree = fit_tree(&x, &y, &TreeHyper::default(), 0).unwrap();
        assert!(matches!(tree.root, TreeNode::Leaf { samples: 3, .. }));
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = midpoint(a, b);
        assert!(a <= t && t < b);
    }

    #[test]
    fn rejects_excessive_depth() {
        let (x, y) = data(&[&[0.0], &[1.0]], &[0, 1]);
        let hyper = TreeHyper {
            max_depth: MAX_TREE_DEPTH + 1,
            ..Default::default()
        };
        assert!(matches!(fit_tree(&x, &y, &hyper, 0), Err(LearnerError::InvalidHyper(_))));
    }
}
