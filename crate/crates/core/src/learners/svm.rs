use serde::{Deserialize, Serialize};

use super::{check_fit_input, check_width, log_loss_from_logit, sigmoid, Classifier, LearnerError};
use crate::table::{FeatureMatrix, LabelVector};

/// Linear SVM trained on `0.5 |w|^2 + c * mean(hinge)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyper {
    /// Base step; iteration `t` uses `learning_rate / sqrt(t + 1)`.
    pub learning_rate: f64,
    pub epochs: usize,
    pub c: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            c: 10.0,
        }
    }
}

/// Logistic map from decision values to probabilities, `sigmoid(a * f + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling {
    pub a: f64,
    pub b: f64,
}

impl PlattScaling {
    pub fn probability(&self, decision: f64) -> f64 {
        sigmoid(self.a * decision + self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub calibration: PlattScaling,
    pub hyper: SvmHyper,
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Objective and one sub-gradient `(J, dJ/dw, dJ/db)`. At the hinge kink
/// (margin exactly 1) the zero sub-gradient is taken.
pub fn svm_objective_and_subgradient(
    weights: &[f64],
    bias: f64,
    x: &FeatureMatrix,
    y: &LabelVector,
    c: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut hinge = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, label) in x.rows().zip(y.iter()) {
        let s = signed(label);
        let f: f64 = weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + bias;
        let margin = s * f;
        if margin < 1.0 {
            hinge += 1.0 - margin;
            for (g, v) in grad_w.iter_mut().zip(row) {
                *g -= s * v;
            }
            grad_b -= s;
        }
    }
    let scale = c / n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g * scale + w;
    }
    let objective = 0.5 * weights.iter().map(|w| w * w).sum::<f64>() + scale * hinge;
    (objective, grad_w, grad_b * scale)
}

/// Fits `sigmoid(a f + b)` to labels by Newton's method on the cross-entropy,
/// using Platt's smoothed targets.
pub fn fit_platt(decisions: &[f64], labels: &LabelVector) -> PlattScaling {
    let [n_neg, n_pos] = labels.class_counts();
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|l| if l == 1 { t_pos } else { t_neg }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| log_loss_from_logit(a * f + b, t))
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((n_pos as f64 + 1.0) / (n_neg as f64 + 1.0)).ln();
    let mut current = objective(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let p = sigmoid(a * f + b);
            let r = p - t;
            let w = p * (1.0 - p);
            ga += r * f;
            gb += r;
            haa += w * f * f;
            hab += w * f;
            hbb += w;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det);
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let candidate = objective(na, nb);
            if candidate < current + 1e-4 * step * (ga * da + gb * db) {
                a = na;
                b = nb;
                current = candidate;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    PlattScaling { a, b }
}

/// Full-batch sub-gradient descent from zero weights, keeping the iterate with
/// the lowest objective, then Platt calibration on the training decisions.
pub fn fit_linear_svm(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &SvmHyper,
    _seed: u64,
) -> Result<LinearSvmModel, LearnerError> {
    check_fit_input(x, y)?;
    let mut weights = vec![0.0; x.n_features()];
    let mut bias = 0.0;
    let mut best = (f64::INFINITY, weights.clone(), bias);
    for epoch in 0..hyper.epochs {
        let (objective, grad_w, grad_b) = svm_objective_and_subgradient(&weights, bias, x, y, hyper.c);
        if !objective.is_finite() {
            return Err(LearnerError::NonFiniteLoss { epoch });
        }
        if objective < best.0 {
            best = (objective, weights.clone(), bias);
        }
        let step = hyper.learning_rate / ((epoch + 1) as f64).sqrt();
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        bias -= step * grad_b;
    }
    let (objective, _, _) = svm_objective_and_subgradient(&weights, bias, x, y, hyper.c);
    if !objective.is_finite() {
        return Err(LearnerError::NonFiniteLoss { epoch: hyper.epochs });
    }
    if objective < best.0 {
        best = (objective, weights, bias);
    }
    let (_, weights, bias) = best;
    let mut model = LinearSvmModel {
        weights,
        bias,
        calibration: PlattScaling { a: 1.0, b: 0.0 },
        hyper: hyper.clone(),
    };
    let decisions: Vec<f64> = x.rows().map(|r| model.decision_function(r)).collect();
    model.calibration = fit_platt(&decisions, y);
    Ok(model)
}

impl LinearSvmModel {
    pub fn decision_function(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

impl Classifier for LinearSvmModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_features(), x)?;
        Ok(x.rows()
            .map(|r| self.calibration.probability(self.decision_function(r)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn blobs(n: usize, gap: f64, seed: u64) -> (FeatureMatrix, LabelVector) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let centre = if label == 1 { gap } else { -gap };
            rows.push(vec![centre + rng.random_range(-1.0..1.0), centre + rng.random_range(-1.0..1.0)]);
            labels.push(label);
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), LabelVector::new(labels).unwrap())
    }

    #[test]
    fn separates_blobs() {
        let (x, y) = blobs(100, 2.0, 1);
        let model = fit_linear_svm(&x, &y, &SvmHyper::default(), 0).unwrap();
        for (row, label) in x.rows().zip(y.iter()) {
            assert_eq!(model.decision_function(row) > 0.0, label == 1);
        }
        assert_eq!(model.predict(&x, 0.5).unwrap(), y);
    }

    #[test]
    fn calibration_is_symmetric_at_boundary() {
        let (x, y) = blobs(100, 1.0, 2);
        let mut rows: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
        rows.extend(x.rows().map(|r| r.iter().map(|v| -v).collect::<Vec<_>>()));
        let mut labels = y.as_slice().to_vec();
        labels.extend(y.iter().map(|l| 1 - l));
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = LabelVector::new(labels).unwrap();
        let model = fit_linear_svm(&x, &y, &SvmHyper::default(), 0).unwrap();
        let p = model.calibration.probability(0.0);
        assert!((0.4..=0.6).contains(&p), "p(0) = {p}");
    }

    #[test]
    fn calibration_matches_target_mean() {
        let (x, y) = blobs(200, 1.0, 2);
        let model = fit_linear_svm(&x, &y, &SvmHyper::default(), 0).unwrap();
        assert!(model.calibration.a > 0.0);
        let [n_neg, n_pos] = y.class_counts();
        let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
        let t_neg = 1.0 / (n_neg as f64 + 2.0);
        let target_sum = n_pos as f64 * t_pos + n_neg as f64 * t_neg;
        let p_sum: f64 = model.predict_proba(&x).unwrap().iter().sum();
        assert!((p_sum - target_sum).abs() < 1e-6, "{p_sum} vs {target_sum}");
    }

    #[test]
    fn subgradient_matches_central_differences_off_the_kink() {
        let mut rng = rng_from_seed(9);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = LabelVector::new((0..40).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let w = vec![0.4, -0.7, 0.2];
        let b = 0.1;
        let c = 3.0;
        let near_kink = x.rows().zip(y.iter()).any(|(r, l)| {
            let f: f64 = w.iter().zip(r).map(|(a, v)| a * v).sum::<f64>() + b;
            (signed(l) * f - 1.0).abs() < 1e-3
        });
        assert!(!near_kink, "fixture must stay away from the kink");
        let (_, gw, gb) = svm_objective_and_subgradient(&w, b, &x, &y, c);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
        for j in 0..3 {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let numeric = (svm_objective_and_subgradient(&wp, b, &x, &y, c).0
                - svm_objective_and_subgradient(&wm, b, &x, &y, c).0)
                / (2.0 * h);
            assert!(rel(gw[j], numeric) < 1e-4, "w{j}: {} vs {numeric}", gw[j]);
        }
        let numeric = (svm_objective_and_subgradient(&w, b + h, &x, &y, c).0
            - svm_objective_and_subgradient(&w, b - h, &x, &y, c).0)
            / (2.0 * h);
        assert!(rel(gb, numeric) < 1e-4);
    }

    #[test]
    fn platt_recovers_logistic_relationship() {
        // decisions d with labels ~ Bernoulli(sigmoid(2 d - 0.5))
        let mut rng = rng_from_seed(4);
        let decisions: Vec<f64> = (0..4000).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<u8> = decisions
            .iter()
            .map(|&d| u8::from(rng.random::<f64>() < sigmoid(2.0 * d - 0.5)))
            .collect();
        let platt = fit_platt(&decisions, &LabelVector::new(labels).unwrap());
        assert!((platt.a - 2.0).abs() < 0.25, "{platt:?}");
        assert!((platt.b + 0.5).abs() < 0.2, "{platt:?}");
    }
}
