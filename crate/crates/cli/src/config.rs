//! Experiment configuration.
//!
//! A config is a TOML file; command-line flags override individual fields.
//!
//! ```toml
//! seed = 42
//! test_fraction = 0.2
//! output_dir = "results"
//! averaging = "weighted"
//!
//! [data]
//! path = "survey.csv"            # or a [data.synthetic] table
//! schema = "schema/survey.toml"
//!
//! [smote]
//! enabled = true
//! k = 5
//!
//! [ensemble]
//! preset = "ensemble3"
//!
//! [[models]]                     # used by `compare`
//! kind = "logistic"
//!
//! [[models]]
//! kind = "gbt"
//! preset = "lgbm-like"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabvote_core::ensemble::EnsemblePreset;
use tabvote_core::learners::{
    ForestHyper, GbtHyper, LearnerConfig, LogisticHyper, MlpHyper, SvmHyper, TreeHyper,
};
use tabvote_core::preprocess::{PipelineConfig, SmoteSettings};
use tabvote_core::training::SearchSpace;
use tabvote_core::Averaging;
use thiserror::Error;

use crate::synthetic::SyntheticSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Mandatory, either here or via `--seed`.
    pub seed: Option<u64>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub smote: SmoteConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub tune: TuneConfig,
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_threshold() -> f64 {
    0.5
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            test_fraction: default_test_fraction(),
            data: DataConfig::default(),
            smote: SmoteConfig::default(),
            ensemble: EnsembleConfig::default(),
            models: Vec::new(),
            output_dir: default_output_dir(),
            averaging: Averaging::default(),
            threshold: default_threshold(),
            tune: TuneConfig::default(),
        }
    }
}

/// Where rows come from: a CSV file, or the synthetic generator when no
/// path is given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Schema TOML; the bundled survey schema when absent.
    pub schema: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    pub enabled: bool,
    pub k: usize,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { enabled: true, k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub preset: EnsemblePreset,
    /// Explicit members; overrides the preset when present.
    pub members: Option<Vec<ModelEntry>>,
    pub weights: Option<Vec<f64>>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            preset: EnsemblePreset::Ensemble3,
            members: None,
            weights: None,
        }
    }
}

impl EnsembleConfig {
    pub fn member_configs(&self) -> Result<Vec<LearnerConfig>, ConfigError> {
        match &self.members {
            None => Ok(self.preset.members()),
            Some(entries) => entries
                .iter()
                .map(|e| {
                    e.spec
                        .learner()
                        .ok_or_else(|| ConfigError::Invalid("ensembles cannot be nested".into()))
                })
                .collect(),
        }
    }

    pub fn name(&self) -> String {
        match &self.members {
            None => self.preset.name().to_string(),
            Some(_) => "ensemble".to_string(),
        }
    }
}

/// One model of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    /// Display name; defaults to the kind's name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Logistic(LogisticHyper),
    LinearSvm(SvmHyper),
    Tree(TreeHyper),
    Forest(ForestHyper),
    Gbt(GbtHyper),
    Mlp(MlpHyper),
    Ensemble(EnsembleConfig),
}

impl ModelSpec {
    pub fn learner(&self) -> Option<LearnerConfig> {
        Some(match self {
            ModelSpec::Logistic(h) => LearnerConfig::Logistic(h.clone()),
            ModelSpec::LinearSvm(h) => LearnerConfig::LinearSvm(h.clone()),
            ModelSpec::Tree(h) => LearnerConfig::Tree(h.clone()),
            ModelSpec::Forest(h) => LearnerConfig::Forest(h.clone()),
            ModelSpec::Gbt(h) => LearnerConfig::Gbt(h.clone()),
            ModelSpec::Mlp(h) => LearnerConfig::Mlp(h.clone()),
            ModelSpec::Ensemble(_) => return None,
        })
    }
}

impl ModelEntry {
    pub fn display_name(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match &self.spec {
            ModelSpec::Ensemble(e) => e.name(),
            other => other.learner().expect("non-ensemble model").name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub n_trials: usize,
    pub space: SearchSpace,
    /// Settings shared by every trial; the search overrides layer widths,
    /// dropout and learning rate.
    pub base: MlpHyper,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            n_trials: 20,
            space: SearchSpace::default(),
            base: MlpHyper::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ensemble: Option<EnsemblePreset>,
    pub averaging: Option<Averaging>,
    pub weights: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads a config file; relative data and schema paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut config.data.path);
        resolve(&mut config.data.schema);
        Ok(config)
    }

    pub fn apply(&mut self, overrides: Overrides) {
        if let Some(data) = overrides.data {
            self.data.path = Some(data);
        }
        if let Some(schema) = overrides.schema {
            self.data.schema = Some(schema);
        }
        if let Some(out) = overrides.out {
            self.output_dir = out;
        }
        if overrides.seed.is_some() {
            self.seed = overrides.seed;
        }
        if let Some(preset) = overrides.ensemble {
            self.ensemble.preset = preset;
            self.ensemble.members = None;
        }
        if let Some(averaging) = overrides.averaging {
            self.averaging = averaging;
        }
        if overrides.weights.is_some() {
            self.ensemble.weights = overrides.weights;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.seed.is_none() {
            return invalid("a seed is required (set `seed` or pass --seed)".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return invalid(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if self.smote.enabled && self.smote.k == 0 {
            return invalid("smote.k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return invalid(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        if self.data.path.is_some() && self.data.synthetic.is_some() {
            return invalid("set either data.path or data.synthetic, not both".into());
        }
        if let Some(spec) = &self.data.synthetic {
            spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let members = self.ensemble.member_configs()?;
        if members.len() < 2 {
            return invalid(format!("an ensemble needs at least 2 members, got {}", members.len()));
        }
        if let Some(w) = &self.ensemble.weights {
            if w.len() != members.len() {
                return invalid(format!("{} ensemble weights for {} members", w.len(), members.len()));
            }
            tabvote_core::ensemble::normalize_weights(w).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            test_fraction: self.test_fraction,
            seed: self.seed(),
            smote: self.smote.enabled.then_some(SmoteSettings { k: self.smote.k }),
        }
    }
}
