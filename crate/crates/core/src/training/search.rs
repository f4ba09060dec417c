//! Random search over MLP layer widths, dropout and learning rate.

use std::fmt::Display;
use std::io::Write;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{fit_mlp, MlpHyper};
use crate::rng::rng_from_seed;
use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search space is empty")]
    EmptySpace,
    #[error("search space has too many configurations to enumerate")]
    SpaceTooLarge,
    #[error("number of trials must be at least 1")]
    NoTrials,
    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Candidate widths, drawn independently for every hidden layer.
    pub widths: Vec<usize>,
    pub n_layers: usize,
    pub dropouts: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            widths: vec![64, 128, 256, 512, 1024],
            n_layers: 4,
            dropouts: vec![0.2, 0.3, 0.5],
            learning_rates: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

impl SearchSpace {
    /// Number of distinct configurations.
    pub fn size(&self) -> Result<usize, SearchError> {
        if self.widths.is_empty() || self.dropouts.is_empty() || self.learning_rates.is_empty() {
            return Err(SearchError::EmptySpace);
        }
        let n_layers = u32::try_from(self.n_layers).map_err(|_| SearchError::SpaceTooLarge)?;
        self.widths
            .len()
            .checked_pow(n_layers)
            .and_then(|n| n.checked_mul(self.dropouts.len()))
            .and_then(|n| n.checked_mul(self.learning_rates.len()))
            .ok_or(SearchError::SpaceTooLarge)
    }

    /// Mixed-radix decoding: learning rate varies slowest, the last layer
    /// width fastest.
    pub fn config(&self, mut index: usize) -> TrialConfig {
        let mut units = vec![0; self.n_layers];
        for slot in units.iter_mut().rev() {
            *slot = self.widths[index % self.widths.len()];
            index /= self.widths.len();
        }
        let dropout = self.dropouts[index % self.dropouts.len()];
        index /= self.dropouts.len();
        let learning_rate = self.learning_rates[index % self.learning_rates.len()];
        TrialConfig {
            units,
            dropout,
            learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub units: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
}

impl TrialConfig {
    pub fn apply(&self, base: &MlpHyper) -> MlpHyper {
        MlpHyper {
            hidden_layers: self.units.clone(),
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: TrialConfig,
    pub val_score: Option<f64>,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the winner.
    pub best_trial: usize,
}

impl SearchResult {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best_trial]
    }

    /// One row per trial; failed trials have an empty score.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SearchError> {
        let n_layers = self.trials.first().map_or(0, |t| t.config.units.len());
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["trial".to_string()];
        header.extend((1..=n_layers).map(|i| format!("units{i}")));
        header.extend(["dropout", "lr", "val_score", "status"].map(String::from));
        out.write_record(&header)?;
        for t in &self.trials {
            let mut row = vec![t.trial.to_string()];
            row.extend(t.config.units.iter().map(|u| u.to_string()));
            row.push(t.config.dropout.to_string());
            row.push(t.config.learning_rate.to_string());
            row.push(t.val_score.map(|s| s.to_string()).unwrap_or_default());
            row.push(match &t.status {
                TrialStatus::Ok => "ok".to_string(),
                TrialStatus::Failed(reason) => format!("failed: {reason}"),
            });
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Evaluates `n_trials` configurations and returns the highest-scoring one.
///
/// When `n_trials` covers the whole space every configuration is evaluated
/// once, in a seeded order; otherwise `n_trials` distinct configurations are
/// sampled. Ties go to the earliest trial. Failing trials are recorded and
/// skipped.
pub fn random_search<F, E>(
    space: &SearchSpace,
    n_trials: usize,
    seed: u64,
    mut objective: F,
) -> Result<SearchResult, SearchError>
where
    F: FnMut(usize, &TrialConfig) -> Result<f64, E>,
    E: Display,
{
    if n_trials == 0 {
        return Err(SearchError::NoTrials);
    }
    let size = space.size()?;
    let mut rng = rng_from_seed(seed);
    let order: Vec<usize> = if n_trials >= size {
        let mut all: Vec<usize> = (0..size).collect();
        all.shuffle(&mut rng);
        all
    } else {
        index::sample(&mut rng, size, n_trials).into_vec()
    };

    let mut trials = Vec::with_capacity(order.len());
    let mut best: Option<(usize, f64)> = None;
    for (trial, &config_index) in order.iter().enumerate() {
        let config = space.config(config_index);
        let (val_score, status) = match objective(trial, &config) {
            Ok(score) if score.is_finite() => (Some(score), TrialStatus::Ok),
            Ok(score) => (None, TrialStatus::Failed(format!("non-finite score {score}"))),
            Err(e) => (None, TrialStatus::Failed(e.to_string())),
        };
        match (&status, val_score) {
            (TrialStatus::Ok, Some(score)) => {
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((trial, score));
                }
            }
            (TrialStatus::Failed(reason), _) => log::warn!("trial {trial} failed: {reason}"),
            _ => {}
        }
        trials.push(TrialRecord {
            trial,
            config,
            val_score,
            status,
        });
    }
    match best {
        Some((best_trial, _)) => Ok(SearchResult { trials, best_trial }),
        None => Err(SearchError::AllTrialsFailed(trials.len())),
    }
}

/// Random search for the MLP, scoring each trial by the validation accuracy
/// of the weights training ends with.
pub fn tune_mlp(
    x: &FeatureMatrix,
    y: &LabelVector,
    base: &MlpHyper,
    space: &SearchSpace,
    n_trials: usize,
    seed: u64,
) -> Result<SearchResult, SearchError> {
    random_search(space, n_trials, seed, |_, config| {
        let (_, history) = fit_mlp(x, y, &config.apply(base), seed)?;
        let record = match history.restored_epoch {
            Some(epoch) => history.records.iter().find(|r| r.epoch == epoch),
            None => history.records.last(),
        };
        Ok::<f64, crate::learners::LearnerError>(record.map_or(f64::NAN, |r| r.val_acc))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn small_space() -> SearchSpace {
        SearchSpace {
            widths: vec![2, 4],
            n_layers: 2,
            dropouts: vec![0.1, 0.2],
            learning_rates: vec![0.1],
        }
    }

    fn score(c: &TrialConfig) -> f64 {
        c.units.iter().sum::<usize>() as f64 + c.dropout
    }

    #[test]
    fn default_space_size() {
        assert_eq!(SearchSpace::default().size().unwrap(), 5usize.pow(4) * 9);
    }

    #[test]
    fn exhaustive_when_trials_cover_space() {
        let space = small_space();
        let result = random_search(&space, 100, 1, |_, c| Ok::<_, String>(score(c))).unwrap();
        assert_eq!(result.trials.len(), 8);
        let distinct: BTreeSet<String> = result.trials.iter().map(|t| format!("{:?}", t.config)).collect();
        assert_eq!(distinct.len(), 8);
        assert_eq!(result.best().config.units, vec![4, 4]);
        assert_eq!(result.best().config.dropout, 0.2);
    }

    #[test]
    fn single_point_space() {
        let space = SearchSpace {
            widths: vec![32],
            n_layers: 2,
            dropouts: vec![0.3],
            learning_rates: vec![1e-3],
        };
        let result = random_search(&space, 1, 4, |_, _| Ok::<_, String>(0.5)).unwrap();
        assert_eq!(result.trials.len(), 1);
        assert_eq!(result.best().config, space.config(0));
    }

    #[test]
    fn planted_peak_is_found() {
        let space = SearchSpace {
            widths: vec![8, 16],
            n_layers: 1,
            dropouts: vec![0.1, 0.2, 0.3],
            learning_rates: vec![0.01],
        };
        assert_eq!(space.size().unwrap(), 6);
        let peak = TrialConfig {
            units: vec![16],
            dropout: 0.2,
            learning_rate: 0.01,
        };
        // Enumeration oracle: the score falls off with distance from the peak.
        let objective = |c: &TrialConfig| -((c.units[0] as f64 - 16.0).abs() + (c.dropout - 0.2).abs() * 10.0);
        let oracle = (0..6)
            .map(|i| space.config(i))
            .max_by(|a, b| objective(a).total_cmp(&objective(b)))
            .unwrap();
        assert_eq!(oracle, peak);
        for seed in 0..10 {
            let result = random_search(&space, 6, seed, |_, c| Ok::<_, String>(objective(c))).unwrap();
            assert_eq!(result.trials.len(), 6);
            assert_eq!(result.best().config, peak);
        }
    }

    #[test]
    fn ties_go_to_earliest_trial() {
        let result = random_search(&small_space(), 8, 3, |_, _| Ok::<_, String>(0.5)).unwrap();
        assert_eq!(result.best_trial, 0);
    }

    #[test]
    fn failures_are_skipped() {
        let result = random_search(&small_space(), 8, 3, |trial, _| {
            if trial % 2 == 0 {
                Err("diverged")
            } else {
                Ok(trial as f64)
            }
        })
        .unwrap();
        assert_eq!(result.best_trial, 7);
        assert_eq!(
            result.trials[0].status,
            TrialStatus::Failed("diverged".into())
        );
        let all_fail = random_search(&small_space(), 3, 3, |_, _| Err::<f64, _>("x"));
        assert!(matches!(all_fail, Err(SearchError::AllTrialsFailed(3))));
    }

    #[test]
    fn csv_header() {
        let result = random_search(&SearchSpace::default(), 2, 0, |_, _| Ok::<_, String>(1.0)).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "trial,units1,units2,units3,units4,dropout,lr,val_score,status"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            random_search(&small_space(), 0, 0, |_, _| Ok::<_, String>(1.0)),
            Err(SearchError::NoTrials)
        ));
        let empty = SearchSpace {
            widths: vec![],
            ..small_space()
        };
        assert!(matches!(empty.size(), Err(SearchError::EmptySpace)));
    }

    proptest! {
        #[test]
        fn winner_has_maximal_score(seed in any::<u64>(), n_trials in 1usize..20) {
            let result = random_search(&small_space(), n_trials, seed, |_, c| Ok::<_, String>(score(c))).unwrap();
            let max = result.trials.iter().filter_map(|t| t.val_score).fold(f64::MIN, f64::max);
            prop_assert_eq!(result.best().val_score, Some(max));
            prop_assert!(result.trials.iter().take(result.best_trial).all(|t| t.val_score < Some(max)));
            prop_assert_eq!(result.trials.len(), n_trials.min(8));
        }

        #[test]
        fn search_is_reproducible(seed in any::<u64>()) {
            let a = random_search(&SearchSpace::default(), 5, seed, |_, c| Ok::<_, String>(score(c))).unwrap();
            let b = random_search(&SearchSpace::default(), 5, seed, |_, c| Ok::<_, String>(score(c))).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
