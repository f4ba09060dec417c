//! Weighted soft-voting ensembles.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{
    Classifier, ForestHyper, GbtHyper, LearnerConfig, LearnerError, LogisticHyper, MlpHyper,
    Model, SvmHyper, TrainingHistory,
};
use crate::rng::derive_seed;
use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("an ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("{members} members but {weights} weights")]
    WeightCountMismatch { members: usize, weights: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("members disagree on input width")]
    WidthMismatch,
    #[error("member `{name}` failed: {source}")]
    Member {
        name: String,
        #[source]
        source: LearnerError,
    },
    #[error("unknown ensemble preset `{0}`")]
    UnknownPreset(String),
}

/// Scales non-negative weights to sum to one. The sum is taken in sorted
/// order so that the result does not depend on member order.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(EnsembleError::InvalidWeights(format!("weight {w} is negative or non-finite")));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if !(total > 0.0) {
        return Err(EnsembleError::InvalidWeights("weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Weighted mean of member probabilities per row.
///
/// Terms are summed in sorted order, making the result bit-identical under
/// any permutation of the members, and clamped to the range spanned by the
/// positively weighted members.
pub fn soft_vote(member_probabilities: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    if member_probabilities.len() != weights.len() {
        return Err(EnsembleError::WeightCountMismatch {
            members: member_probabilities.len(),
            weights: weights.len(),
        });
    }
    let weights = normalize_weights(weights)?;
    let n_rows = member_probabilities.first().map_or(0, Vec::len);
    if member_probabilities.iter().any(|p| p.len() != n_rows) {
        return Err(EnsembleError::WidthMismatch);
    }
    let mut terms = Vec::with_capacity(weights.len());
    Ok((0..n_rows)
        .map(|row| {
            terms.clear();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (p, &w) in member_probabilities.iter().zip(&weights) {
                terms.push(w * p[row]);
                if w > 0.0 {
                    lo = lo.min(p[row]);
                    hi = hi.max(p[row]);
                }
            }
            terms.sort_by(f64::total_cmp);
            terms.iter().sum::<f64>().clamp(lo, hi)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub name: String,
    pub weight: f64,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    members: Vec<Member>,
}

impl VotingEnsemble {
    /// Equal weights when `weights` is `None`.
    pub fn new(members: Vec<(String, Model)>, weights: Option<&[f64]>) -> Result<Self, EnsembleError> {
        if members.len() < 2 {
            return Err(EnsembleError::TooFewMembers(members.len()));
        }
        let raw = match weights {
            Some(w) if w.len() != members.len() => {
                return Err(EnsembleError::WeightCountMismatch {
                    members: members.len(),
                    weights: w.len(),
                })
            }
            Some(w) => w.to_vec(),
            None => vec![1.0; members.len()],
        };
        let normalized = normalize_weights(&raw)?;
        let width = members[0].1.n_features();
        if members.iter().any(|(_, m)| m.n_features() != width) {
            return Err(EnsembleError::WidthMismatch);
        }
        Ok(Self {
            members: members
                .into_iter()
                .zip(normalized)
                .map(|((name, model), weight)| Member { name, weight, model })
                .collect(),
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    /// Probabilities of every member, in member order.
    pub fn member_probabilities(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, EnsembleError> {
        self.members
            .iter()
            .map(|m| {
                m.model.predict_proba(x).map_err(|source| EnsembleError::Member {
                    name: m.name.clone(),
                    source,
                })
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, EnsembleError> {
        soft_vote(&self.member_probabilities(x)?, &self.weights())
    }

    pub fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Result<LabelVector, EnsembleError> {
        Ok(crate::learners::threshold_labels(&self.predict_proba(x)?, threshold))
    }
}

impl Classifier for VotingEnsemble {
    fn n_features(&self) -> usize {
        self.members[0].model.n_features()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        let probabilities = self
            .members
            .iter()
            .map(|m| m.model.predict_proba(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(soft_vote(&probabilities, &self.weights()).expect("weights validated at construction"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsemblePreset {
    /// MLP, random forest and level-wise boosted trees.
    Ensemble3,
    /// Logistic regression, linear SVM, random forest, both boosted-tree
    /// growth policies and the MLP.
    Ensemble6,
}

impl EnsemblePreset {
    pub fn members(&self) -> Vec<LearnerConfig> {
        match self {
            EnsemblePreset::Ensemble3 => vec![
                LearnerConfig::Mlp(MlpHyper::default()),
                LearnerConfig::Forest(ForestHyper::default()),
                LearnerConfig::Gbt(GbtHyper::xgb_like()),
            ],
            EnsemblePreset::Ensemble6 => vec![
                LearnerConfig::Logistic(LogisticHyper::default()),
                LearnerConfig::LinearSvm(SvmHyper::default()),
                LearnerConfig::Forest(ForestHyper::default()),
                LearnerConfig::Gbt(GbtHyper::xgb_like()),
                LearnerConfig::Gbt(GbtHyper::lgbm_like()),
                LearnerConfig::Mlp(MlpHyper::default()),
            ],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsemblePreset::Ensemble3 => "ensemble3",
            EnsemblePreset::Ensemble6 => "ensemble6",
        }
    }
}

impl FromStr for EnsemblePreset {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ensemble3" => Ok(EnsemblePreset::Ensemble3),
            "ensemble6" => Ok(EnsemblePreset::Ensemble6),
            other => Err(EnsembleError::UnknownPreset(other.to_string())),
        }
    }
}

/// Seed handed to member `index` of an ensemble trained with `seed`.
pub fn member_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 0x100 + index as u64)
}

#[derive(Debug, Clone)]
pub struct FittedEnsemble {
    pub ensemble: VotingEnsemble,
    pub configs: Vec<LearnerConfig>,
    pub seeds: Vec<u64>,
    /// Epoch histories of members that produce one.
    pub histories: Vec<Option<TrainingHistory>>,
}

/// Trains every member on the same data with its own derived seed.
pub fn fit_ensemble(
    configs: &[LearnerConfig],
    weights: Option<&[f64]>,
    x: &FeatureMatrix,
    y: &LabelVector,
    seed: u64,
) -> Result<FittedEnsemble, EnsembleError> {
    if configs.len() < 2 {
        return Err(EnsembleError::TooFewMembers(configs.len()));
    }
    let mut members = Vec::with_capacity(configs.len());
    let mut histories = Vec::with_capacity(configs.len());
    let mut seeds = Vec::with_capacity(configs.len());
    for (index, config) in configs.iter().enumerate() {
        let member_seed = member_seed(seed, index);
        let (model, history) = config.fit(x, y, member_seed).map_err(|source| EnsembleError::Member {
            name: config.name().to_string(),
            source,
        })?;
        members.push((unique_name(config.name(), index, configs), model));
        histories.push(history);
        seeds.push(member_seed);
    }
    Ok(FittedEnsemble {
        ensemble: VotingEnsemble::new(members, weights)?,
        configs: configs.to_vec(),
        seeds,
        histories,
    })
}

/// Config name, suffixed with the member index when the name repeats.
fn unique_name(name: &str, index: usize, configs: &[LearnerConfig]) -> String {
    if configs.iter().filter(|c| c.name() == name).count() > 1 {
        format!("{name}_{index}")
    } else {
        name.to_string()
    }
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMember {
    pub name: String,
    pub weight: f64,
    /// Model file, relative to the manifest.
    pub model_file: String,
}

/// Points at the member model files of a saved ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub format_version: u32,
    pub seed: u64,
    pub members: Vec<ManifestMember>,
}

impl EnsembleManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Loads the manifest and every referenced model.
    pub fn load_ensemble(path: impl AsRef<Path>) -> crate::Result<(Self, VotingEnsemble)> {
        let path = path.as_ref();
        let manifest: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut members = Vec::with_capacity(manifest.members.len());
        let mut weights = Vec::with_capacity(manifest.members.len());
        for m in &manifest.members {
            let doc = crate::learners::ModelDocument::load(dir.join(&m.model_file))?;
            members.push((m.name.clone(), doc.model));
            weights.push(m.weight);
        }
        let ensemble = VotingEnsemble::new(members, Some(&weights))?;
        Ok((manifest, ensemble))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LogisticModel, LogisticHyper};

    fn constant_model(bias: f64) -> Model {
        Model::Logistic(LogisticModel {
            weights: vec![0.0],
            bias,
            hyper: LogisticHyper::default(),
        })
    }

    #[test]
    fn identical_members_reproduce_member() {
        let p = vec![0.1, 0.7, 0.123456789];
        let out = soft_vote(&[p.clone(), p.clone(), p.clone()], &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn weighted_average() {
        let out = soft_vote(&[vec![0.2], vec![0.8]], &[3.0, 1.0]).unwrap();
        assert!((out[0] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn permutation_is_bit_identical() {
        let a = vec![0.1, 0.91, 0.333];
        let b = vec![0.7, 0.02, 0.5];
        let c = vec![0.3, 0.4, 0.999];
        let x = soft_vote(&[a.clone(), b.clone(), c.clone()], &[0.1, 0.7, 0.2]).unwrap();
        let y = soft_vote(&[c, a, b], &[0.2, 0.1, 0.7]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(normalize_weights(&[0.0, 0.0]).is_err());
        assert!(normalize_weights(&[1.0, -1.0]).is_err());
        assert!(normalize_weights(&[1.0, f64::NAN]).is_err());
        assert!(matches!(
            soft_vote(&[vec![0.5]], &[1.0, 1.0]),
            Err(EnsembleError::WeightCountMismatch { .. })
        ));
    }

    #[test]
    fn needs_two_members() {
        let err = VotingEnsemble::new(vec![("a".into(), constant_model(0.0))], None).unwrap_err();
        assert!(matches!(err, EnsembleError::TooFewMembers(1)));
    }

    #[test]
    fn ensemble_of_constant_models() {
        let ensemble = VotingEnsemble::new(
            vec![("a".into(), constant_model(0.0)), ("b".into(), constant_model(0.0))],
            Some(&[1.0, 4.0]),
        )
        .unwrap();
        assert_eq!(ensemble.weights(), vec![0.2, 0.8]);
        let x = FeatureMatrix::from_rows(&[vec![3.0], vec![-1.0]]).unwrap();
        assert_eq!(ensemble.predict_proba(&x).unwrap(), vec![0.5, 0.5]);
        assert_eq!(ensemble.predict(&x, 0.5).unwrap().as_slice(), &[1, 1]);
    }

    #[test]
    fn preset_parse() {
        assert_eq!("ensemble3".parse::<EnsemblePreset>().unwrap(), EnsemblePreset::Ensemble3);
        assert_eq!(EnsemblePreset::Ensemble6.members().len(), 6);
        assert!("ensemble4".parse::<EnsemblePreset>().is_err());
    }

    #[test]
    fn duplicate_names_get_suffixes() {
        let configs = vec![
            LearnerConfig::Logistic(LogisticHyper::default()),
            LearnerConfig::Logistic(LogisticHyper::default()),
            LearnerConfig::Forest(ForestHyper::default()),
        ];
        assert_eq!(unique_name("logistic_regression", 1, &configs), "logistic_regression_1");
        assert_eq!(unique_name("random_forest", 2, &configs), "random_forest");
    }
}
