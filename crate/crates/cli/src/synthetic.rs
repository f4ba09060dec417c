//! Synthetic survey generator with a planted, noisy decision rule.
//!
//! Each row gets its label first (exact class counts from the imbalance
//! ratio). A clean rule value equals the label with probability
//! `1 - noise`; the seven features are then drawn uniformly, rejecting draws
//! whose rule value differs from the clean value. Because the rule sees only
//! the features, the Bayes-optimal classifier predicts the majority label for
//! each rule value and its accuracy has a closed form.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use tabvote_core::rng::rng_from_seed;
use tabvote_core::{Cell, Schema, Table};
use thiserror::Error;

pub const SURVEY_SCHEMA_TOML: &str = include_str!("../../../schema/survey.toml");

/// Category-name prefixes, one per feature column of the survey schema.
const CATEGORY_PREFIXES: [&str; 7] = ["age", "occupation", "disaster", "shelter", "observed", "distress", "safety"];

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic settings: {0}")]
    Invalid(String),
    #[error(transparent)]
    Table(#[from] tabvote_core::table::TableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows where feature `feature` takes one of `categories` satisfy the term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTerm {
    pub feature: usize,
    pub categories: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    /// Negative-to-positive ratio; `4.0` means 4:1.
    pub imbalance: f64,
    /// Probability that a row's label disagrees with the planted rule.
    pub noise: f64,
    pub category_counts: Vec<usize>,
    /// Disjunction of at most three terms.
    pub rule: Vec<RuleTerm>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_rows: 2000,
            imbalance: 4.0,
            noise: 0.05,
            category_counts: vec![5, 6, 4, 2, 3, 3, 2],
            rule: vec![
                RuleTerm {
                    feature: 2,
                    categories: vec![0],
                },
                RuleTerm {
                    feature: 4,
                    categories: vec![2],
                },
                RuleTerm {
                    feature: 6,
                    categories: vec![1],
                },
            ],
        }
    }
}

/// Sidecar written next to the generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMetadata {
    pub seed: u64,
    pub spec: SyntheticSpec,
    pub n_negative: usize,
    pub n_positive: usize,
    pub bayes_accuracy: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let invalid = |msg: String| Err(SyntheticError::Invalid(msg));
        if self.n_rows < 2 {
            return invalid(format!("n_rows must be at least 2, got {}", self.n_rows));
        }
        if !(self.imbalance > 0.0 && self.imbalance.is_finite()) {
            return invalid(format!("imbalance must be positive, got {}", self.imbalance));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return invalid(format!("noise must lie in [0, 0.5), got {}", self.noise));
        }
        if self.category_counts.len() != CATEGORY_PREFIXES.len() {
            return invalid(format!(
                "expected {} category counts, got {}",
                CATEGORY_PREFIXES.len(),
                self.category_counts.len()
            ));
        }
        if self.category_counts.iter().any(|&c| c < 2) {
            return invalid("every feature needs at least 2 categories".into());
        }
        if self.rule.is_empty() || self.rule.len() > 3 {
            return invalid(format!("rule must have 1 to 3 terms, got {}", self.rule.len()));
        }
        for term in &self.rule {
            let Some(&count) = self.category_counts.get(term.feature) else {
                return invalid(format!("rule feature {} out of range", term.feature));
            };
            if term.categories.is_empty() || term.categories.iter().any(|&c| c >= count) {
                return invalid(format!("rule categories for feature {} out of range", term.feature));
            }
        }
        if self.rule_fraction() >= 1.0 {
            return invalid("rule is satisfied by every row; no negative rule value exists".into());
        }
        let (n_negative, n_positive) = self.class_counts();
        if n_negative == 0 || n_positive == 0 {
            return invalid("imbalance leaves one class empty".into());
        }
        Ok(())
    }

    /// `(negatives, positives)` with positives `round(n / (ratio + 1))`.
    pub fn class_counts(&self) -> (usize, usize) {
        let positives = (self.n_rows as f64 / (self.imbalance + 1.0)).round() as usize;
        (self.n_rows - positives, positives)
    }

    fn rule_holds(&self, row: &[usize]) -> bool {
        self.rule.iter().any(|t| t.categories.contains(&row[t.feature]))
    }

    /// Probability that a uniformly drawn row satisfies the rule.
    pub fn rule_fraction(&self) -> f64 {
        let miss: f64 = self
            .rule
            .iter()
            .map(|t| {
                let mut distinct = t.categories.clone();
                distinct.sort_unstable();
                distinct.dedup();
                1.0 - distinct.len() as f64 / self.category_counts[t.feature] as f64
            })
            .product();
        1.0 - miss
    }

    /// Accuracy of the best classifier that sees only the features.
    pub fn bayes_accuracy(&self) -> f64 {
        let (n_negative, n_positive) = self.class_counts();
        let p1 = n_positive as f64 / self.n_rows as f64;
        let p0 = n_negative as f64 / self.n_rows as f64;
        let eta = self.noise;
        (p1 * (1.0 - eta)).max(p0 * eta) + (p0 * (1.0 - eta)).max(p1 * eta)
    }
}

pub fn survey_schema() -> Schema {
    Schema::from_toml_str(SURVEY_SCHEMA_TOML).expect("bundled survey schema is valid")
}

pub fn category_name(feature: usize, code: usize) -> String {
    format!("{}_{code:02}", CATEGORY_PREFIXES[feature])
}

/// Generates the table in memory.
pub fn generate_table(spec: &SyntheticSpec, seed: u64) -> Result<Table, SyntheticError> {
    spec.validate()?;
    let schema = survey_schema();
    let mut rng = rng_from_seed(seed);
    let (n_negative, n_positive) = spec.class_counts();
    let mut labels: Vec<u8> = vec![0; n_negative];
    labels.extend(std::iter::repeat_n(1, n_positive));
    labels.shuffle(&mut rng);

    let n_features = spec.category_counts.len();
    let mut features: Vec<Vec<Cell>> = vec![Vec::with_capacity(spec.n_rows); n_features];
    let mut target = Vec::with_capacity(spec.n_rows);
    let mut row = vec![0usize; n_features];
    for &label in &labels {
        let flip = rng.random::<f64>() < spec.noise;
        let clean = (label == 1) != flip;
        loop {
            for (value, &count) in row.iter_mut().zip(&spec.category_counts) {
                *value = rng.random_range(0..count);
            }
            if spec.rule_holds(&row) == clean {
                break;
            }
        }
        for (feature, &code) in row.iter().enumerate() {
            features[feature].push(Cell::value(category_name(feature, code)));
        }
        target.push(Cell::value(if label == 1 {
            schema.positive_label.clone()
        } else {
            schema.negative_label.clone()
        }));
    }
    features.push(target);
    Ok(Table::new(schema, features)?)
}

/// Path of the metadata sidecar for a generated CSV.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("rule.json")
}

/// Writes the CSV and its metadata sidecar; returns the metadata.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64, out_path: &Path) -> Result<SyntheticMetadata, SyntheticError> {
    let table = generate_table(spec, seed)?;
    let (n_negative, n_positive) = spec.class_counts();
    let metadata = SyntheticMetadata {
        seed,
        spec: spec.clone(),
        n_negative,
        n_positive,
        bayes_accuracy: spec.bayes_accuracy(),
    };
    crate::io::write_atomic(out_path, table.to_csv_string().as_bytes())?;
    let sidecar = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    crate::io::write_atomic(&metadata_path(out_path), sidecar.as_bytes())?;
    Ok(metadata)
}
