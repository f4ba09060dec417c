//! Confusion matrices, per-class scores and model comparison tables.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::LabelVector;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("cannot evaluate an empty prediction set")]
    Empty,
    #[error("unknown averaging `{0}`, expected `macro` or `weighted`")]
    UnknownAveraging(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &LabelVector, predicted: &LabelVector) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        let mut cm = Self::default();
        for (t, p) in truth.iter().zip(predicted.iter()) {
            match (t, p) {
                (0, 0) => cm.tn += 1,
                (0, _) => cm.fp += 1,
                (_, 0) => cm.fn_ += 1,
                _ => cm.tp += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn accuracy(&self) -> f64 {
        (self.tn + self.tp) as f64 / self.total() as f64
    }

    /// Two-by-two CSV, rows are true classes and columns predicted classes.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["", "predicted_negative", "predicted_positive"])?;
        out.write_record(["actual_negative", &self.tn.to_string(), &self.fp.to_string()])?;
        out.write_record(["actual_positive", &self.fn_.to_string(), &self.tp.to_string()])?;
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Scores of one class. A score whose denominator is zero is reported as 0
/// and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassScores {
    fn new(true_pos: usize, false_pos: usize, false_neg: usize) -> Self {
        let (precision, precision_undefined) = ratio(true_pos, true_pos + false_pos);
        let (recall, recall_undefined) = ratio(true_pos, true_pos + false_neg);
        let (f1, f1_undefined) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        Self {
            precision,
            recall,
            f1,
            support: true_pos + false_neg,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Unweighted mean over the two classes.
    Macro,
    /// Mean weighted by class support.
    #[default]
    Weighted,
}

impl FromStr for Averaging {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro" => Ok(Averaging::Macro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(MetricsError::UnknownAveraging(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub negative: ClassScores,
    pub positive: ClassScores,
    pub macro_avg: AveragedScores,
    pub weighted_avg: AveragedScores,
}

impl EvaluationReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self, MetricsError> {
        let n = confusion.total();
        if n == 0 {
            return Err(MetricsError::Empty);
        }
        let ConfusionMatrix { tn, fp, fn_, tp } = confusion;
        let positive = ClassScores::new(tp, fp, fn_);
        let negative = ClassScores::new(tn, fn_, fp);
        let mean = |f: fn(&ClassScores) -> f64| (f(&negative) + f(&positive)) / 2.0;
        let weighted = |f: fn(&ClassScores) -> f64| {
            (f(&negative) * negative.support as f64 + f(&positive) * positive.support as f64) / n as f64
        };
        Ok(Self {
            confusion,
            accuracy: confusion.accuracy(),
            macro_avg: AveragedScores {
                precision: mean(|c| c.precision),
                recall: mean(|c| c.recall),
                f1: mean(|c| c.f1),
            },
            weighted_avg: AveragedScores {
                precision: weighted(|c| c.precision),
                recall: weighted(|c| c.recall),
                f1: weighted(|c| c.f1),
            },
            negative,
            positive,
        })
    }

    pub fn averaged(&self, averaging: Averaging) -> AveragedScores {
        match averaging {
            Averaging::Macro => self.macro_avg,
            Averaging::Weighted => self.weighted_avg,
        }
    }
}

pub fn evaluate(truth: &LabelVector, predicted: &LabelVector) -> Result<EvaluationReport, MetricsError> {
    EvaluationReport::from_confusion(ConfusionMatrix::from_labels(truth, predicted)?)
}

pub const COMPARISON_CSV_HEADER: &str = "model,accuracy,precision,recall,f1";

/// One row of a comparison; `None` scores mark a model that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub accuracy: Option<f64>,
    pub scores: Option<AveragedScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub averaging: Averaging,
    pub rows: Vec<ComparisonRow>,
}

/// Percentage with two decimals, e.g. `0.9676 -> "96.76"`.
pub fn percent(value: f64) -> String {
    format!("{:.2}", value * 100.0)
}

/// Builds a comparison table in the given order.
pub fn compare_table(entries: &[(&str, Option<&EvaluationReport>)], averaging: Averaging) -> ComparisonTable {
    let rows = entries
        .iter()
        .map(|(name, report)| ComparisonRow {
            model: if name.trim().is_empty() {
                "(unnamed)".to_string()
            } else {
                name.to_string()
            },
            accuracy: report.map(|r| r.accuracy),
            scores: report.map(|r| r.averaged(averaging)),
        })
        .collect();
    ComparisonTable { averaging, rows }
}

impl ComparisonRow {
    fn cells(&self) -> [String; 5] {
        match (self.accuracy, self.scores) {
            (Some(acc), Some(s)) => [
                self.model.clone(),
                percent(acc),
                percent(s.precision),
                percent(s.recall),
                percent(s.f1),
            ],
            _ => [
                self.model.clone(),
                "failed".into(),
                "failed".into(),
                "failed".into(),
                "failed".into(),
            ],
        }
    }
}

impl ComparisonTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(COMPARISON_CSV_HEADER.split(','))?;
        for row in &self.rows {
            out.write_record(row.cells())?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    /// Column-aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let header = ["Model", "Accuracy", "Precision", "Recall", "F1"];
        let rows: Vec<[String; 5]> = self.rows.iter().map(ComparisonRow::cells).collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut text = String::new();
        let mut line = |cells: &[&str]| {
            let mut parts = Vec::with_capacity(cells.len());
            for (i, cell) in cells.iter().enumerate() {
                if i == 0 {
                    parts.push(format!("{cell:<w$}", w = widths[i]));
                } else {
                    parts.push(format!("{cell:>w$}", w = widths[i]));
                }
            }
            writeln!(text, "{}", parts.join("  ").trim_end()).expect("writing to string");
        };
        line(&header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &rows {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    fn matrix(tn: usize, fp: usize, fn_: usize, tp: usize) -> ConfusionMatrix {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    #[test]
    fn counts_cells() {
        let cm = ConfusionMatrix::from_labels(&labels(&[0, 0, 1, 1, 1]), &labels(&[0, 1, 0, 1, 1])).unwrap();
        assert_eq!(cm, matrix(1, 1, 1, 2));
    }

    #[test]
    fn survey_like_matrix() {
        let report = EvaluationReport::from_confusion(matrix(337, 0, 13, 51)).unwrap();
        assert_eq!(report.accuracy, 388.0 / 401.0);
        assert_eq!(percent(report.accuracy), "96.76");
        assert_eq!(report.positive.precision, 1.0);
        assert_eq!(report.positive.recall, 51.0 / 64.0);
        assert_eq!(report.negative.recall, 1.0);
        assert_eq!(report.negative.precision, 337.0 / 350.0);
        assert_eq!(report.positive.support, 64);
        assert_eq!(report.negative.support, 337);
    }

    #[test]
    fn undefined_scores_are_flagged() {
        let report = EvaluationReport::from_confusion(matrix(5, 0, 3, 0)).unwrap();
        assert_eq!(report.positive.precision, 0.0);
        assert!(report.positive.precision_undefined);
        assert!(!report.positive.recall_undefined);
        assert!(report.positive.f1_undefined);
        assert!(!report.negative.precision_undefined);
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(EvaluationReport::from_confusion(matrix(0, 0, 0, 0)), Err(MetricsError::Empty)));
        assert!(matches!(
            evaluate(&labels(&[0]), &labels(&[0, 1])),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn averaging_parse() {
        assert_eq!("Macro".parse::<Averaging>().unwrap(), Averaging::Macro);
        assert_eq!(" weighted".parse::<Averaging>().unwrap(), Averaging::Weighted);
        assert!("micro".parse::<Averaging>().is_err());
    }

    #[test]
    fn comparison_rendering() {
        let report = EvaluationReport::from_confusion(matrix(337, 0, 13, 51)).unwrap();
        let table = compare_table(&[("ensemble", Some(&report)), ("", None)], Averaging::Weighted);
        let csv = table.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(COMPARISON_CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("ensemble,96.76,"));
        assert_eq!(lines.next(), Some("(unnamed),failed,failed,failed,failed"));
        let text = table.to_text();
        assert!(text.lines().next().unwrap().starts_with("Model"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn confusion_csv() {
        let mut buf = Vec::new();
        matrix(1, 2, 3, 4).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            ",predicted_negative,predicted_positive\nactual_negative,1,2\nactual_positive,3,4\n"
        );
    }
}
