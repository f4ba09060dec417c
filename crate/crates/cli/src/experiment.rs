//! The `run`, `compare` and `tune` workflows and the files they write.
//!
//! Output files carry no timestamps or absolute paths, so a repeated run with
//! the same inputs and seed reproduces every file byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabvote_core::ensemble::{fit_ensemble, EnsembleError, EnsembleManifest, ManifestMember, MANIFEST_FORMAT_VERSION};
use tabvote_core::learners::{threshold_labels, LearnerConfig, LearnerError, MlpHyper, ModelDocument};
use tabvote_core::metrics::{compare_table, evaluate, percent, AveragedScores, ComparisonTable, EvaluationReport};
use tabvote_core::preprocess::{prepare, PreparedData, PreprocessError, SmoteSettings};
use tabvote_core::rng::derive_seed;
use tabvote_core::table::{load_csv, validate, TableError};
use tabvote_core::training::{tune_mlp, SearchError, SearchResult, TrialConfig};
use tabvote_core::{Averaging, Classifier, LabelVector, Schema, Table, TrainingHistory};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ModelEntry, ModelSpec};
use crate::io::{write_atomic, write_json};
use crate::synthetic::{generate_table, survey_schema, SyntheticError, SyntheticSpec};

pub const REPORT_VERSION: &str = "1.0";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => EXIT_CONFIG,
            ExperimentError::Data(_) => EXIT_DATA,
            ExperimentError::Divergence(_) => EXIT_DIVERGENCE,
            ExperimentError::Training(_) | ExperimentError::Io { .. } => EXIT_FAILURE,
        }
    }

    fn learner(name: &str, error: LearnerError) -> Self {
        let message = format!("{name}: {error}");
        match error {
            LearnerError::NonFiniteLoss { .. } => ExperimentError::Divergence(message),
            LearnerError::InvalidHyper(_) => ExperimentError::Config(ConfigError::Invalid(message)),
            LearnerError::BatchTooSmall(_) | LearnerError::NonFiniteInput | LearnerError::EmptyInput => {
                ExperimentError::Data(message)
            }
            _ => ExperimentError::Training(message),
        }
    }

    fn ensemble(error: EnsembleError) -> Self {
        match error {
            EnsembleError::Member { name, source } => Self::learner(&name, source),
            other => ExperimentError::Config(ConfigError::Invalid(other.to_string())),
        }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<TableError> for ExperimentError {
    fn from(e: TableError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

impl From<PreprocessError> for ExperimentError {
    fn from(e: PreprocessError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

impl From<SyntheticError> for ExperimentError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::Invalid(_) => ExperimentError::Config(ConfigError::Invalid(e.to_string())),
            SyntheticError::Table(t) => t.into(),
            SyntheticError::Io(source) => ExperimentError::Io {
                path: PathBuf::new(),
                source,
            },
        }
    }
}

impl From<SearchError> for ExperimentError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::AllTrialsFailed(_) => ExperimentError::Divergence(e.to_string()),
            SearchError::Csv(_) => ExperimentError::Training(e.to_string()),
            _ => ExperimentError::Config(ConfigError::Invalid(e.to_string())),
        }
    }
}

/// Loaded rows plus a short description of where they came from.
pub struct LoadedData {
    pub table: Table,
    pub source: String,
}

pub fn load_schema(config: &ExperimentConfig) -> Result<Schema, ExperimentError> {
    match &config.data.schema {
        Some(path) => Schema::from_file(path)
            .map_err(|e| ConfigError::Invalid(format!("schema {}: {e}", path.display())).into()),
        None => Ok(survey_schema()),
    }
}

/// Reads the configured CSV, or generates synthetic rows when no path is set.
pub fn load_data(config: &ExperimentConfig) -> Result<LoadedData, ExperimentError> {
    let (table, source) = match &config.data.path {
        Some(path) => {
            let schema = load_schema(config)?;
            let table = load_csv(path, &schema)?;
            let name = path
                .file_name()
                .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
            (table, name)
        }
        None => {
            let spec = match &config.data.synthetic {
                Some(spec) => spec.clone(),
                None => {
                    log::warn!("no data path configured; using the default synthetic survey");
                    SyntheticSpec::default()
                }
            };
            (generate_table(&spec, config.seed())?, "synthetic".to_string())
        }
    };
    let report = validate(&table)?;
    if report.total_missing() > 0 {
        log::info!("{} missing feature cells will be imputed", report.total_missing());
    }
    log::info!("loaded {} rows from {source}", table.n_rows());
    Ok(LoadedData { table, source })
}

fn prepare_data(config: &ExperimentConfig) -> Result<(LoadedData, PreparedData), ExperimentError> {
    let data = load_data(config)?;
    let prepared = prepare(&data.table, &config.pipeline())?;
    log::info!(
        "{} training rows ({} after oversampling), {} test rows",
        prepared.n_train_original,
        prepared.x_train.n_rows(),
        prepared.x_test.n_rows()
    );
    Ok((data, prepared))
}

/// Test-set evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    /// Normalized voting weight, for ensemble members.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<f64>,
    pub seed: u64,
    pub accuracy: f64,
    /// Precision, recall and F1 under the report's averaging.
    pub averaged: AveragedScores,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Version of the report layout.
    pub spec_version: String,
    pub seed: u64,
    pub data_source: String,
    pub n_rows: usize,
    /// Training rows before oversampling.
    pub n_train: usize,
    pub n_train_oversampled: usize,
    pub n_test: usize,
    pub test_fraction: f64,
    pub smote: Option<SmoteSettings>,
    pub threshold: f64,
    pub averaging: Averaging,
    pub ensemble: ModelResult,
    pub members: Vec<ModelResult>,
}

impl RunReport {
    pub fn comparison(&self) -> ComparisonTable {
        let mut entries: Vec<(&str, Option<&EvaluationReport>)> = vec![(&self.ensemble.name, Some(&self.ensemble.report))];
        entries.extend(self.members.iter().map(|m| (m.name.as_str(), Some(&m.report))));
        compare_table(&entries, self.averaging)
    }
}

fn score(
    name: &str,
    model: &dyn Classifier,
    prepared: &PreparedData,
    threshold: f64,
) -> Result<(EvaluationReport, Vec<f64>), ExperimentError> {
    let probabilities = model
        .predict_proba(&prepared.x_test)
        .map_err(|e| ExperimentError::learner(name, e))?;
    let predicted = threshold_labels(&probabilities, threshold);
    let report = evaluate(&prepared.y_test, &predicted).map_err(|e| ExperimentError::Training(e.to_string()))?;
    Ok((report, probabilities))
}

fn model_result(name: &str, weight: Option<f64>, seed: u64, report: EvaluationReport, averaging: Averaging) -> ModelResult {
    ModelResult {
        name: name.to_string(),
        weight,
        seed,
        accuracy: report.accuracy,
        averaged: report.averaged(averaging),
        report,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    write_atomic(path, text.as_bytes()).map_err(ExperimentError::io(path))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    write_json(path, value).map_err(ExperimentError::io(path))
}

fn write_history(dir: &Path, file: &str, history: &TrainingHistory) -> Result<(), ExperimentError> {
    write_text(&dir.join(file), &history.to_csv_string())
}

fn predictions_csv(rows: &[usize], truth: &LabelVector, probabilities: &[f64], threshold: f64) -> String {
    let mut out = String::from("row,truth,probability,predicted\n");
    for ((row, label), p) in rows.iter().zip(truth.iter()).zip(probabilities) {
        out.push_str(&format!("{row},{label},{p},{}\n", u8::from(*p >= threshold)));
    }
    out
}

/// Everything a finished `run` produced.
pub struct RunOutcome {
    pub report: RunReport,
    pub output_dir: PathBuf,
}

/// Trains the configured ensemble, evaluates it and its members on the test
/// split and writes all artifacts to the output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let seed = config.seed();
    let (data, prepared) = prepare_data(config)?;
    let configs = config.ensemble.member_configs()?;
    let fitted = fit_ensemble(
        &configs,
        config.ensemble.weights.as_deref(),
        &prepared.x_train,
        &prepared.y_train,
        seed,
    )
    .map_err(ExperimentError::ensemble)?;

    let ensemble_name = config.ensemble.name();
    let (ensemble_report, ensemble_proba) = score(&ensemble_name, &fitted.ensemble, &prepared, config.threshold)?;
    let weights = fitted.ensemble.weights();
    let mut members = Vec::with_capacity(configs.len());
    for (i, member) in fitted.ensemble.members().iter().enumerate() {
        let (report, _) = score(&member.name, &member.model, &prepared, config.threshold)?;
        members.push(model_result(&member.name, Some(weights[i]), fitted.seeds[i], report, config.averaging));
    }
    let report = RunReport {
        spec_version: REPORT_VERSION.to_string(),
        seed,
        data_source: data.source,
        n_rows: data.table.n_rows(),
        n_train: prepared.n_train_original,
        n_train_oversampled: prepared.x_train.n_rows(),
        n_test: prepared.x_test.n_rows(),
        test_fraction: config.test_fraction,
        smote: prepared.preprocessor.smote,
        threshold: config.threshold,
        averaging: config.averaging,
        ensemble: model_result(&ensemble_name, None, seed, ensemble_report, config.averaging),
        members,
    };

    let out = &config.output_dir;
    write_text(&out.join("preprocessor.json"), &prepared.preprocessor.to_json())?;
    let mut manifest_members = Vec::with_capacity(configs.len());
    let mut first_history = true;
    for (i, member) in fitted.ensemble.members().iter().enumerate() {
        let file = format!("models/{}.json", member.name);
        let doc = ModelDocument::new(&member.name, fitted.seeds[i], fitted.configs[i].clone(), member.model.clone());
        write_text(&out.join(&file), &doc.to_json())?;
        manifest_members.push(ManifestMember {
            name: member.name.clone(),
            weight: member.weight,
            model_file: file,
        });
        if let Some(history) = &fitted.histories[i] {
            if first_history {
                write_history(out, "history.csv", history)?;
                first_history = false;
            }
            write_history(out, &format!("history_{}.csv", member.name), history)?;
        }
    }
    let manifest = EnsembleManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        seed,
        members: manifest_members,
    };
    write_text(&out.join("ensemble.json"), &manifest.to_json())?;

    let mut confusion = Vec::new();
    report
        .ensemble
        .report
        .confusion
        .write_csv(&mut confusion)
        .map_err(|e| ExperimentError::Training(e.to_string()))?;
    write_atomic(&out.join("confusion.csv"), &confusion).map_err(ExperimentError::io(&out.join("confusion.csv")))?;
    write_text(
        &out.join("predictions.csv"),
        &predictions_csv(&prepared.preprocessor.split.test_rows, &prepared.y_test, &ensemble_proba, config.threshold),
    )?;
    let table = report.comparison();
    write_text(&out.join("comparison.csv"), &table.to_csv_string())?;
    write_text(&out.join("comparison.txt"), &table.to_text())?;
    write_json_file(&out.join("report.json"), &report)?;
    Ok(RunOutcome {
        report,
        output_dir: out.clone(),
    })
}

/// Seed for models trained on their own in `compare`. It does not depend on
/// the model's position, so identical entries give identical results.
pub fn standalone_seed(seed: u64) -> u64 {
    derive_seed(seed, 0x200)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum CompareStatus {
    Ok { result: ModelResult },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEntry {
    pub name: String,
    #[serde(flatten)]
    pub status: CompareStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Version of the report layout.
    pub spec_version: String,
    pub seed: u64,
    pub data_source: String,
    pub n_train: usize,
    pub n_test: usize,
    pub averaging: Averaging,
    pub models: Vec<CompareEntry>,
}

impl CompareReport {
    pub fn table(&self) -> ComparisonTable {
        let entries: Vec<(&str, Option<&EvaluationReport>)> = self
            .models
            .iter()
            .map(|m| {
                let report = match &m.status {
                    CompareStatus::Ok { result } => Some(&result.report),
                    CompareStatus::Failed { .. } => None,
                };
                (m.name.as_str(), report)
            })
            .collect();
        compare_table(&entries, self.averaging)
    }

    /// `model,accuracy` rows for a bar chart; failed models are left out.
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("model,accuracy\n");
        for m in &self.models {
            if let CompareStatus::Ok { result } = &m.status {
                let name = if m.name.contains([',', '"', '\n']) {
                    format!("\"{}\"", m.name.replace('"', "\"\""))
                } else {
                    m.name.clone()
                };
                out.push_str(&format!("{name},{}\n", percent(result.accuracy)));
            }
        }
        out
    }
}

/// Models compared when the config lists none: the six ensemble6 learners
/// and the configured ensemble.
fn default_models(config: &ExperimentConfig) -> Vec<ModelEntry> {
    let mut models: Vec<ModelEntry> = tabvote_core::EnsemblePreset::Ensemble6
        .members()
        .into_iter()
        .map(|c| ModelEntry {
            name: None,
            spec: match c {
                LearnerConfig::Logistic(h) => ModelSpec::Logistic(h),
                LearnerConfig::LinearSvm(h) => ModelSpec::LinearSvm(h),
                LearnerConfig::Tree(h) => ModelSpec::Tree(h),
                LearnerConfig::Forest(h) => ModelSpec::Forest(h),
                LearnerConfig::Gbt(h) => ModelSpec::Gbt(h),
                LearnerConfig::Mlp(h) => ModelSpec::Mlp(h),
            },
        })
        .collect();
    models.push(ModelEntry {
        name: None,
        spec: ModelSpec::Ensemble(config.ensemble.clone()),
    });
    models
}

fn compare_one(
    entry: &ModelEntry,
    prepared: &PreparedData,
    config: &ExperimentConfig,
) -> Result<ModelResult, ExperimentError> {
    let name = entry.display_name();
    let seed = config.seed();
    let (report, seed) = match &entry.spec {
        ModelSpec::Ensemble(ensemble) => {
            let configs = ensemble.member_configs()?;
            let fitted = fit_ensemble(
                &configs,
                ensemble.weights.as_deref(),
                &prepared.x_train,
                &prepared.y_train,
                seed,
            )
            .map_err(ExperimentError::ensemble)?;
            (score(&name, &fitted.ensemble, prepared, config.threshold)?.0, seed)
        }
        spec => {
            let learner = spec.learner().expect("non-ensemble model");
            let seed = standalone_seed(seed);
            let (model, _) = learner
                .fit(&prepared.x_train, &prepared.y_train, seed)
                .map_err(|e| ExperimentError::learner(&name, e))?;
            (score(&name, &model, prepared, config.threshold)?.0, seed)
        }
    };
    Ok(model_result(&name, None, seed, report, config.averaging))
}

/// Trains every listed model on the same prepared data and tabulates the
/// test metrics. A model that diverges or fails to train becomes a failed
/// row; configuration and data errors abort the comparison.
pub fn compare(config: &ExperimentConfig) -> Result<CompareReport, ExperimentError> {
    config.validate()?;
    let models = if config.models.is_empty() {
        log::info!("no [[models]] configured; comparing the default set");
        default_models(config)
    } else {
        config.models.clone()
    };
    let (data, prepared) = prepare_data(config)?;
    let mut entries = Vec::with_capacity(models.len());
    for entry in &models {
        let name = entry.display_name();
        log::info!("training {name}");
        let status = match compare_one(entry, &prepared, config) {
            Ok(result) => CompareStatus::Ok { result },
            Err(e @ (ExperimentError::Divergence(_) | ExperimentError::Training(_))) => {
                log::warn!("{name} failed: {e}");
                CompareStatus::Failed { reason: e.to_string() }
            }
            Err(e) => return Err(e),
        };
        entries.push(CompareEntry { name, status });
    }
    let report = CompareReport {
        spec_version: REPORT_VERSION.to_string(),
        seed: config.seed(),
        data_source: data.source,
        n_train: prepared.n_train_original,
        n_test: prepared.x_test.n_rows(),
        averaging: config.averaging,
        models: entries,
    };
    let out = &config.output_dir;
    let table = report.table();
    write_text(&out.join("preprocessor.json"), &prepared.preprocessor.to_json())?;
    write_text(&out.join("comparison.csv"), &table.to_csv_string())?;
    write_text(&out.join("comparison.txt"), &table.to_text())?;
    write_text(&out.join("accuracy.csv"), &report.accuracy_csv())?;
    write_json_file(&out.join("comparison.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestConfig {
    pub trial: usize,
    pub val_score: f64,
    pub config: TrialConfig,
    /// Full MLP settings with the winning values applied.
    pub hyper: MlpHyper,
}

/// Random search over MLP widths, dropout and learning rate, scored on the
/// MLP's internal validation split of the training rows.
pub fn tune(config: &ExperimentConfig) -> Result<(SearchResult, BestConfig), ExperimentError> {
    config.validate()?;
    let (_, prepared) = prepare_data(config)?;
    let result = tune_mlp(
        &prepared.x_train,
        &prepared.y_train,
        &config.tune.base,
        &config.tune.space,
        config.tune.n_trials,
        config.seed(),
    )?;
    let best = result.best();
    let best_config = BestConfig {
        trial: best.trial,
        val_score: best.val_score.expect("best trial has a score"),
        config: best.config.clone(),
        hyper: best.config.apply(&config.tune.base),
    };
    let out = &config.output_dir;
    let mut trials = Vec::new();
    result.write_csv(&mut trials)?;
    write_atomic(&out.join("trials.csv"), &trials).map_err(ExperimentError::io(&out.join("trials.csv")))?;
    write_json_file(&out.join("best_config.json"), &best_config)?;
    write_text(&out.join("preprocessor.json"), &prepared.preprocessor.to_json())?;
    Ok((result, best_config))
}
