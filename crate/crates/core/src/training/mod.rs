//! Training callbacks and hyperparameter search.

mod search;

use serde::{Deserialize, Serialize};

pub use search::{
    random_search, tune_mlp, SearchError, SearchResult, SearchSpace, TrialConfig, TrialRecord, TrialStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStopConfig {
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    /// Minimum decrease of the validation loss that counts as improvement.
    pub min_delta: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            patience: 10,
            min_delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EarlyStopDecision<W> {
    Continue,
    /// Stop and restore `weights`, recorded at `best_epoch`.
    Stop { best_epoch: usize, weights: W },
}

/// Tracks the best validation loss and a snapshot of the weights that achieved it.
#[derive(Debug, Clone)]
pub struct EarlyStopping<W> {
    config: EarlyStopConfig,
    best_loss: f64,
    best: Option<(usize, W)>,
    epochs_since_improve: usize,
}

impl<W: Clone> EarlyStopping<W> {
    pub fn new(config: EarlyStopConfig) -> Self {
        Self {
            config,
            best_loss: f64::INFINITY,
            best: None,
            epochs_since_improve: 0,
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|(epoch, _)| *epoch)
    }

    pub fn epochs_since_improve(&self) -> usize {
        self.epochs_since_improve
    }

    pub fn step(&mut self, epoch: usize, val_loss: f64, weights: &W) -> EarlyStopDecision<W> {
        if val_loss < self.best_loss - self.config.min_delta {
            self.best_loss = val_loss;
            self.best = Some((epoch, weights.clone()));
            self.epochs_since_improve = 0;
            return EarlyStopDecision::Continue;
        }
        self.epochs_since_improve += 1;
        match &self.best {
            Some((best_epoch, best_weights)) if self.epochs_since_improve >= self.config.patience => {
                EarlyStopDecision::Stop {
                    best_epoch: *best_epoch,
                    weights: best_weights.clone(),
                }
            }
            _ => EarlyStopDecision::Continue,
        }
    }

    pub fn into_best(self) -> Option<(usize, W)> {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub min_delta: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 5,
            min_lr: 1e-6,
            min_delta: 1e-4,
        }
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// improvement, never going below `min_lr`.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    config: PlateauConfig,
    lr: f64,
    best_loss: f64,
    epochs_since_improve: usize,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, config: PlateauConfig) -> Self {
        Self {
            config,
            lr: initial_lr,
            best_loss: f64::INFINITY,
            epochs_since_improve: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Returns the learning rate for the next epoch.
    pub fn step(&mut self, _epoch: usize, val_loss: f64) -> f64 {
        if val_loss < self.best_loss - self.config.min_delta {
            self.best_loss = val_loss;
            self.epochs_since_improve = 0;
        } else {
            self.epochs_since_improve += 1;
            if self.epochs_since_improve >= self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
                self.epochs_since_improve = 0;
            }
        }
        self.lr
    }
}
