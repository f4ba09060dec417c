//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a tree to the residuals `y - sigmoid(F)` using the
//! second-order split gain, sets every leaf to the Newton step
//! `sum(residual) / (sum(p (1 - p)) + lambda)` and adds `learning_rate * tree`
//! to the scores. Two growth policies are available: level-wise to a maximum
//! depth and best-first (leaf-wise) to a maximum number of leaves.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, TreeNode, MAX_TREE_DEPTH};
use super::{check_fit_input, check_width, log_loss_from_logit, sigmoid, Classifier, LearnerError};
use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GbtPreset {
    /// Level-wise growth to `max_depth`.
    XgbLike,
    /// Leaf-wise growth to `max_leaves`.
    LgbmLike,
}

/// Deserialized fields missing from the input take the defaults of the
/// chosen preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GbtHyperFields")]
pub struct GbtHyper {
    pub preset: GbtPreset,
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// Depth limit for both policies.
    pub max_depth: usize,
    /// Leaf limit of the leaf-wise policy.
    pub max_leaves: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub min_samples_leaf: usize,
}

#[derive(Deserialize)]
struct GbtHyperFields {
    preset: Option<GbtPreset>,
    n_rounds: Option<usize>,
    learning_rate: Option<f64>,
    max_depth: Option<usize>,
    max_leaves: Option<usize>,
    lambda: Option<f64>,
    min_samples_leaf: Option<usize>,
}

impl From<GbtHyperFields> for GbtHyper {
    fn from(f: GbtHyperFields) -> Self {
        let base = match f.preset.unwrap_or(GbtPreset::XgbLike) {
            GbtPreset::XgbLike => Self::xgb_like(),
            GbtPreset::LgbmLike => Self::lgbm_like(),
        };
        Self {
            preset: base.preset,
            n_rounds: f.n_rounds.unwrap_or(base.n_rounds),
            learning_rate: f.learning_rate.unwrap_or(base.learning_rate),
            max_depth: f.max_depth.unwrap_or(base.max_depth),
            max_leaves: f.max_leaves.unwrap_or(base.max_leaves),
            lambda: f.lambda.unwrap_or(base.lambda),
            min_samples_leaf: f.min_samples_leaf.unwrap_or(base.min_samples_leaf),
        }
    }
}

impl Default for GbtHyper {
    fn default() -> Self {
        Self::xgb_like()
    }
}

impl GbtHyper {
    pub fn xgb_like() -> Self {
        Self {
            preset: GbtPreset::XgbLike,
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 5,
            max_leaves: usize::MAX,
            lambda: 1.0,
            min_samples_leaf: 1,
        }
    }

    pub fn lgbm_like() -> Self {
        Self {
            preset: GbtPreset::LgbmLike,
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 12,
            max_leaves: 15,
            lambda: 1.0,
            min_samples_leaf: 5,
        }
    }

    fn validate(&self) -> Result<(), LearnerError> {
        if self.n_rounds == 0 {
            return Err(LearnerError::InvalidHyper("n_rounds must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.lambda >= 0.0) {
            return Err(LearnerError::InvalidHyper(
                "learning_rate and lambda must be non-negative".into(),
            ));
        }
        if self.max_depth > MAX_TREE_DEPTH {
            return Err(LearnerError::InvalidHyper(format!(
                "max_depth {} exceeds {MAX_TREE_DEPTH}",
                self.max_depth
            )));
        }
        if self.min_samples_leaf == 0 || self.max_leaves < 2 {
            return Err(LearnerError::InvalidHyper(
                "min_samples_leaf must be >= 1 and max_leaves >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Log-odds of the training prior.
    pub initial_score: f64,
    pub learning_rate: f64,
    /// Leaf values are un-shrunk log-odds steps.
    pub trees: Vec<TreeNode>,
    /// Mean training log-loss before the first round and after each round.
    pub round_losses: Vec<f64>,
    pub n_features: usize,
    pub hyper: GbtHyper,
}

impl GbtModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.initial_score + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

impl Classifier for GbtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_features, x)?;
        Ok(x.rows().map(|r| sigmoid(self.raw_score(r))).collect())
    }
}

/// `0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l))`
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let score = |g: f64, h: f64| if h + lambda > 0.0 { g * g / (h + lambda) } else { 0.0 };
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct GrowNode {
    samples: Vec<usize>,
    depth: usize,
    best: Option<Candidate>,
    children: Option<(usize, usize, usize, f64)>,
}

struct RoundContext<'a> {
    x: &'a FeatureMatrix,
    residual: &'a [f64],
    hessian: &'a [f64],
    hyper: &'a GbtHyper,
}

impl RoundContext<'_> {
    fn best_split(&self, samples: &[usize]) -> Option<Candidate> {
        let n = samples.len();
        let min_leaf = self.hyper.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let g_total: f64 = samples.iter().map(|&i| self.residual[i]).sum();
        let h_total: f64 = samples.iter().map(|&i| self.hessian[i]).sum();
        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in 0..self.x.n_features() {
            sorted.clear();
            sorted.extend(samples.iter().map(|&i| (self.x.get(i, feature), i)));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 1..n {
                let i = sorted[k - 1].1;
                gl += self.residual[i];
                hl += self.hessian[i];
                if sorted[k - 1].0 == sorted[k].0 || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let gain = split_gain(gl, hl, g_total - gl, h_total - hl, self.hyper.lambda);
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(sorted[k - 1].0, sorted[k].0),
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, n_rows: usize) -> Vec<GrowNode> {
        let depth_ok = |d: usize| d < self.hyper.max_depth;
        let root_samples: Vec<usize> = (0..n_rows).collect();
        let root_best = if depth_ok(0) { self.best_split(&root_samples) } else { None };
        let mut nodes = vec![GrowNode {
            samples: root_samples,
            depth: 0,
            best: root_best,
            children: None,
        }];
        let mut n_leaves = 1;
        loop {
            if n_leaves >= self.hyper.max_leaves {
                break;
            }
            let open = nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.children.is_none() && n.best.is_some());
            let pick = match self.hyper.preset {
                // first open node in creation order: breadth-first levels
                GbtPreset::XgbLike => open.map(|(i, _)| i).next(),
                GbtPreset::LgbmLike => open
                    .fold(None::<(usize, f64)>, |acc, (i, n)| {
                        let gain = n.best.expect("filtered").gain;
                        match acc {
                            Some((_, g)) if g >= gain => acc,
                            _ => Some((i, gain)),
                        }
                    })
                    .map(|(i, _)| i),
            };
            let Some(index) = pick else { break };
            let cand = nodes[index].best.expect("open node has a candidate");
            let depth = nodes[index].depth + 1;
            let (left, right): (Vec<usize>, Vec<usize>) = nodes[index]
                .samples
                .iter()
                .partition(|&&i| self.x.get(i, cand.feature) <= cand.threshold);
            let left_best = if depth_ok(depth) { self.best_split(&left) } else { None };
            let right_best = if depth_ok(depth) { self.best_split(&right) } else { None };
            let l = nodes.len();
            nodes.push(GrowNode {
                samples: left,
                depth,
                best: left_best,
                children: None,
            });
            nodes.push(GrowNode {
                samples: right,
                depth,
                best: right_best,
                children: None,
            });
            nodes[index].children = Some((l, l + 1, cand.feature, cand.threshold));
            n_leaves += 1;
        }
        nodes
    }

    /// Newton step for one leaf, halved while it would raise the leaf's loss.
    fn leaf_value(&self, samples: &[usize], scores: &[f64], targets: &[f64]) -> f64 {
        let g: f64 = samples.iter().map(|&i| self.residual[i]).sum();
        let h: f64 = samples.iter().map(|&i| self.hessian[i]).sum();
        if h + self.hyper.lambda <= 0.0 {
            return 0.0;
        }
        let mut value = g / (h + self.hyper.lambda);
        let eta = self.hyper.learning_rate;
        let loss_at = |v: f64| -> f64 {
            samples
                .iter()
                .map(|&i| log_loss_from_logit(scores[i] + eta * v, targets[i]))
                .sum()
        };
        let before = loss_at(0.0);
        for _ in 0..60 {
            if loss_at(value) <= before {
                return value;
            }
            value *= 0.5;
        }
        0.0
    }

    fn to_tree(&self, nodes: &[GrowNode], index: usize, scores: &[f64], targets: &[f64]) -> TreeNode {
        let node = &nodes[index];
        match node.children {
            Some((l, r, feature, threshold)) => TreeNode::Split {
                feature,
                threshold,
                left: Box::new(self.to_tree(nodes, l, scores, targets)),
                right: Box::new(self.to_tree(nodes, r, scores, targets)),
            },
            None => TreeNode::Leaf {
                value: self.leaf_value(&node.samples, scores, targets),
                samples: node.samples.len(),
            },
        }
    }
}

fn scale_leaves(node: &mut TreeNode, factor: f64) {
    match node {
        TreeNode::Split { left, right, .. } => {
            scale_leaves(left, factor);
            scale_leaves(right, factor);
        }
        TreeNode::Leaf { value, .. } => *value *= factor,
    }
}

fn mean_log_loss(scores: &[f64], targets: &[f64]) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&z, &t)| log_loss_from_logit(z, t))
        .sum::<f64>()
        / scores.len() as f64
}

/// The seed is accepted for the uniform learner contract; boosting here uses
/// no sampling.
pub fn fit_gbt(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &GbtHyper,
    _seed: u64,
) -> Result<GbtModel, LearnerError> {
    check_fit_input(x, y)?;
    hyper.validate()?;
    let n = x.n_rows();
    let targets: Vec<f64> = y.iter().map(f64::from).collect();
    let prior = (targets.iter().sum::<f64>() / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let initial_score = (prior / (1.0 - prior)).ln();

    let mut scores = vec![initial_score; n];
    let mut round_losses = vec![mean_log_loss(&scores, &targets)];
    let mut trees = Vec::with_capacity(hyper.n_rounds);
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    for round in 0..hyper.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residual[i] = targets[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        let ctx = RoundContext {
            x,
            residual: &residual,
            hessian: &hessian,
            hyper,
        };
        let nodes = ctx.grow(n);
        let mut tree = ctx.to_tree(&nodes, 0, &scores, &targets);
        let previous = *round_losses.last().expect("initial loss recorded");
        let mut updated = scores.clone();
        let mut loss = f64::INFINITY;
        // Per-leaf safeguards bound each leaf's loss; summation order can
        // still add an ulp globally, so shrink the whole tree if needed.
        for attempt in 0..=60 {
            if attempt == 60 {
                scale_leaves(&mut tree, 0.0);
            }
            for (i, score) in updated.iter_mut().enumerate() {
                *score = scores[i] + hyper.learning_rate * tree.predict(x.row(i));
            }
            loss = mean_log_loss(&updated, &targets);
            if loss <= previous || !loss.is_finite() {
                break;
            }
            scale_leaves(&mut tree, 0.5);
        }
        if !loss.is_finite() {
            return Err(LearnerError::NonFiniteLoss { epoch: round });
        }
        scores = updated;
        round_losses.push(loss);
        trees.push(tree);
    }
    Ok(GbtModel {
        initial_score,
        learning_rate: hyper.learning_rate,
        trees,
        round_losses,
        n_features: x.n_features(),
        hyper: hyper.clone(),
    })
}
