//! Binary classifiers sharing the [`Classifier`] interface.
//!
//! Every learner trains on a scaled [`FeatureMatrix`] with 0/1 labels and
//! returns calibrated-or-not probabilities for the positive class. [`Model`]
//! and [`LearnerConfig`] wrap the concrete types for serialization and for
//! configuration-driven training.

pub mod forest;
pub mod gbt;
pub mod history;
pub mod logistic;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{fit_forest, ForestHyper, ForestModel};
pub use gbt::{fit_gbt, GbtHyper, GbtModel, GbtPreset};
pub use history::{EpochRecord, TrainingHistory, HISTORY_CSV_HEADER};
pub use logistic::{fit_logistic, LogisticHyper, LogisticModel};
pub use mlp::{fit_mlp, mean_bce, mlp_forward, MlpHyper, MlpModel, Mode, Optimizer};
pub use svm::{fit_linear_svm, LinearSvmModel, PlattScaling, SvmHyper};
pub use tree::{fit_tree, MaxFeatures, TreeHyper, TreeModel, TreeNode};

use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training diverged at epoch {epoch}: loss non-finite or above the divergence limit")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("empty training set")]
    EmptyInput,
    #[error("batch of {0} rows is too small for batch normalization")]
    BatchTooSmall(usize),
    #[error("training data contains non-finite values")]
    NonFiniteInput,
}

/// A fitted binary classifier.
pub trait Classifier {
    fn n_features(&self) -> usize;

    /// Probability of the positive class for every row, each in `[0, 1]`.
    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError>;

    /// Labels by `p >= threshold`.
    fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Result<LabelVector, LearnerError> {
        Ok(threshold_labels(&self.predict_proba(x)?, threshold))
    }
}

pub fn threshold_labels(probabilities: &[f64], threshold: f64) -> LabelVector {
    LabelVector::from_vec_unchecked(probabilities.iter().map(|&p| u8::from(p >= threshold)).collect())
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a target in `[0, 1]`, computed
/// without overflow.
pub fn log_loss_from_logit(z: f64, target: f64) -> f64 {
    z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()
}

pub(crate) fn check_fit_input(x: &FeatureMatrix, y: &LabelVector) -> Result<(), LearnerError> {
    if x.n_rows() != y.len() {
        return Err(LearnerError::LengthMismatch {
            features: x.n_rows(),
            labels: y.len(),
        });
    }
    if x.n_rows() == 0 {
        return Err(LearnerError::EmptyInput);
    }
    if !x.is_finite() {
        return Err(LearnerError::NonFiniteInput);
    }
    Ok(())
}

pub(crate) fn check_width(expected: usize, x: &FeatureMatrix) -> Result<(), LearnerError> {
    if x.n_features() != expected {
        return Err(LearnerError::DimensionMismatch {
            expected,
            found: x.n_features(),
        });
    }
    Ok(())
}

/// Any fitted learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticModel),
    LinearSvm(LinearSvmModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    Mlp(MlpModel),
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Logistic(m) => m,
            Model::LinearSvm(m) => m,
            Model::Tree(m) => m,
            Model::Forest(m) => m,
            Model::Gbt(m) => m,
            Model::Mlp(m) => m,
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        self.inner().predict_proba(x)
    }
}

/// Learner choice plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    Logistic(LogisticHyper),
    LinearSvm(SvmHyper),
    Tree(TreeHyper),
    Forest(ForestHyper),
    Gbt(GbtHyper),
    Mlp(MlpHyper),
}

impl LearnerConfig {
    /// Short stable name used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::Logistic(_) => "logistic_regression",
            LearnerConfig::LinearSvm(_) => "linear_svm",
            LearnerConfig::Tree(_) => "decision_tree",
            LearnerConfig::Forest(_) => "random_forest",
            LearnerConfig::Gbt(h) => match h.preset {
                GbtPreset::XgbLike => "gbt_xgb",
                GbtPreset::LgbmLike => "gbt_lgbm",
            },
            LearnerConfig::Mlp(_) => "mlp",
        }
    }

    /// Trains the learner. Only the MLP produces an epoch history.
    pub fn fit(
        &self,
        x: &FeatureMatrix,
        y: &LabelVector,
        seed: u64,
    ) -> Result<(Model, Option<TrainingHistory>), LearnerError> {
        Ok(match self {
            LearnerConfig::Logistic(h) => (Model::Logistic(fit_logistic(x, y, h, seed)?), None),
            LearnerConfig::LinearSvm(h) => (Model::LinearSvm(fit_linear_svm(x, y, h, seed)?), None),
            LearnerConfig::Tree(h) => (Model::Tree(fit_tree(x, y, h, seed)?), None),
            LearnerConfig::Forest(h) => (Model::Forest(fit_forest(x, y, h, seed)?), None),
            LearnerConfig::Gbt(h) => (Model::Gbt(fit_gbt(x, y, h, seed)?), None),
            LearnerConfig::Mlp(h) => {
                let (model, history) = fit_mlp(x, y, h, seed)?;
                (Model::Mlp(model), Some(history))
            }
        })
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub config: LearnerConfig,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(name: impl Into<String>, seed: u64, config: LearnerConfig, model: Model) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            name: name.into(),
            seed,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_loss_matches_direct_formula() {
        for &z in &[-5.0, -0.3, 0.0, 0.7, 4.0] {
            for &t in &[0.0, 1.0, 0.25] {
                let p: f64 = sigmoid(z);
                let direct = -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
                assert!((log_loss_from_logit(z, t) - direct).abs() < 1e-12);
            }
        }
        assert!(log_loss_from_logit(-800.0, 1.0).is_finite());
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(threshold_labels(&[0.5, 0.49, 1.0], 0.5).as_slice(), &[1, 0, 1]);
    }

    #[test]
    fn fit_input_checks() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let y = LabelVector::new(vec![0]).unwrap();
        assert!(matches!(check_fit_input(&x, &y), Err(LearnerError::LengthMismatch { .. })));
        let x = FeatureMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        let y = LabelVector::new(vec![0]).unwrap();
        assert!(matches!(check_fit_input(&x, &y), Err(LearnerError::NonFiniteInput)));
    }

    #[test]
    fn model_document_roundtrip() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = LabelVector::new(vec![0, 0, 1, 1]).unwrap();
        let config = LearnerConfig::Tree(TreeHyper::default());
        let (model, history) = config.fit(&x, &y, 1).unwrap();
        assert!(history.is_none());
        let doc = ModelDocument::new("tree", 1, config, model);
        let back = ModelDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.model.predict(&x, 0.5).unwrap().as_slice(), &[0, 0, 1, 1]);
    }
}
