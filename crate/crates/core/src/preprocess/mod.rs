//! Preprocessing pipeline.
//!
//! [`prepare`] runs the fixed sequence
//!
//! 1. stratified split on the labels,
//! 2. mode imputation fitted on training rows,
//! 3. lexicographic label encoding fitted on training rows,
//! 4. SMOTE on the encoded training matrix,
//! 5. standardization fitted on the oversampled training matrix,
//!
//! and applies the fitted states to the test rows. The split only looks at
//! the labels, so changing feature cells of test rows cannot change any
//! fitted state.

mod encoder;
mod imputer;
mod scaler;
mod smote;
mod split;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoder::LabelEncoder;
pub use imputer::{apply_imputer, fit_imputer, ImputerState};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams, STD_EPSILON};
pub use smote::{knn_minority, smote_oversample, smote_oversample_with, Interpolation, DEFAULT_K};
pub use split::{allocate_test_slots, stratified_split, SplitIndices};

use crate::rng::derive_seed;
use crate::table::{validate, FeatureMatrix, LabelVector, Table, TableError};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("column `{0}` has no observed values to impute from")]
    AllMissingColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("category `{0}` was not seen when the encoder was fitted")]
    UnseenCategory(String),
    #[error("missing value reached the encoder; impute first")]
    MissingValue,
    #[error("split leaves {train} training and {test} test rows")]
    DegenerateSplit { train: usize, test: usize },
    #[error("class {0} has no members")]
    EmptyClass(u8),
    #[error("SMOTE needs at least 2 minority samples, found {0}")]
    TooFewMinority(usize),
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

pub const PREPROCESSOR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteSettings {
    pub k: usize,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub test_fraction: f64,
    pub seed: u64,
    /// `None` disables oversampling.
    pub smote: Option<SmoteSettings>,
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            test_fraction: 0.2,
            seed,
            smote: Some(SmoteSettings::default()),
        }
    }
}

/// Every state fitted by [`prepare`], enough to replay the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    pub format_version: u32,
    pub feature_columns: Vec<String>,
    pub imputer: ImputerState,
    /// One encoder per feature column, in `feature_columns` order.
    pub encoders: Vec<LabelEncoder>,
    pub scaler: ScalerParams,
    pub split: SplitIndices,
    pub smote: Option<SmoteSettings>,
    pub smote_seed: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub x_train: FeatureMatrix,
    pub y_train: LabelVector,
    pub x_test: FeatureMatrix,
    pub y_test: LabelVector,
    /// Training rows before oversampling.
    pub n_train_original: usize,
    pub preprocessor: FittedPreprocessor,
}

pub fn prepare(table: &Table, config: &PipelineConfig) -> Result<PreparedData, PreprocessError> {
    validate(table)?;
    let labels = table.labels()?;
    let split_seed = derive_seed(config.seed, 0);
    let smote_seed = derive_seed(config.seed, 1);
    let split = stratified_split(&labels, config.test_fraction, split_seed)?;

    let train_table = table.select_rows(&split.train_rows)?;
    let test_table = table.select_rows(&split.test_rows)?;
    let feature_columns: Vec<String> = table
        .schema()
        .feature_names()
        .into_iter()
        .map(String::from)
        .collect();
    let names: Vec<&str> = feature_columns.iter().map(String::as_str).collect();

    let imputer = fit_imputer(&train_table, &names)?;
    let train_table = apply_imputer(&imputer, &train_table)?;
    let encoders = names
        .iter()
        .map(|name| LabelEncoder::fit(train_table.column(name).expect("feature column exists")))
        .collect::<Result<Vec<_>, _>>()?;

    let x_train = encode_matrix(&train_table, &feature_columns, &encoders)?;
    let y_train = labels.select(&split.train_rows);
    let n_train_original = x_train.n_rows();
    let (x_train, y_train) = match config.smote {
        Some(settings) => smote_oversample(&x_train, &y_train, settings.k, smote_seed)?,
        None => (x_train, y_train),
    };
    let scaler = fit_scaler(&x_train)?;
    let x_train = apply_scaler(&scaler, &x_train)?;

    let preprocessor = FittedPreprocessor {
        format_version: PREPROCESSOR_FORMAT_VERSION,
        feature_columns,
        imputer,
        encoders,
        scaler,
        split,
        smote: config.smote,
        smote_seed,
        seed: config.seed,
    };
    let x_test = preprocessor.transform(&test_table)?;
    let y_test = labels.select(&preprocessor.split.test_rows);
    Ok(PreparedData {
        x_train,
        y_train,
        x_test,
        y_test,
        n_train_original,
        preprocessor,
    })
}

fn encode_matrix(
    table: &Table,
    feature_columns: &[String],
    encoders: &[LabelEncoder],
) -> Result<FeatureMatrix, PreprocessError> {
    let n = table.n_rows();
    let d = feature_columns.len();
    let mut values = vec![0.0; n * d];
    for (j, (name, encoder)) in feature_columns.iter().zip(encoders).enumerate() {
        let cells = table
            .column(name)
            .ok_or_else(|| PreprocessError::UnknownColumn(name.clone()))?;
        for (i, code) in encoder.encode(cells)?.into_iter().enumerate() {
            values[i * d + j] = f64::from(code);
        }
    }
    Ok(FeatureMatrix::new(values, n, feature_columns.to_vec())?)
}

impl FittedPreprocessor {
    /// Imputes, encodes and scales a table with the fitted states.
    pub fn transform(&self, table: &Table) -> Result<FeatureMatrix, PreprocessError> {
        let imputed = apply_imputer(&self.imputer, table)?;
        let encoded = encode_matrix(&imputed, &self.feature_columns, &self.encoders)?;
        apply_scaler(&self.scaler, &encoded)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preprocessor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?)?)
    }
}
