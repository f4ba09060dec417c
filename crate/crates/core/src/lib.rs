//! Classification toolkit for categorical survey data.
//!
//! The crate covers the whole path from a raw CSV export to an evaluated
//! classifier:
//!
//! * [`table`] loads and validates categorical tables against a schema.
//! * [`preprocess`] imputes, label-encodes, splits, oversamples (SMOTE) and
//!   standardizes, fitting every state on training rows only.
//! * [`learners`] holds the individual classifiers behind the [`Classifier`]
//!   trait: logistic regression, linear SVM, CART, random forest, gradient
//!   boosted trees and a batch-norm/dropout MLP.
//! * [`ensemble`] combines fitted classifiers by soft voting.
//! * [`training`] provides early stopping, learning-rate reduction on plateau
//!   and random hyperparameter search.
//! * [`metrics`] computes confusion matrices and precision/recall/F1 reports.
//!
//! Every fit is a pure function of its inputs and an explicit seed.

pub mod ensemble;
pub mod error;
pub mod learners;
pub mod metrics;
pub mod preprocess;
pub mod rng;
pub mod table;
pub mod training;

pub use ensemble::{EnsemblePreset, VotingEnsemble};
pub use error::{Error, Result};
pub use learners::{Classifier, LearnerConfig, Model, TrainingHistory};
pub use metrics::{Averaging, ConfusionMatrix, EvaluationReport};
pub use preprocess::{FittedPreprocessor, PipelineConfig, PreparedData};
pub use table::{Cell, ColumnKind, ColumnSchema, FeatureMatrix, LabelVector, Schema, Table};
