use serde::{Deserialize, Serialize};

use super::{check_fit_input, check_width, log_loss_from_logit, sigmoid, Classifier, LearnerError};
use crate::table::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: LogisticHyper,
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Mean binary cross-entropy plus `l2 / 2 * |w|^2` and its gradient
/// `(loss, d/dw, d/db)`. The bias is not regularized.
pub fn logistic_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    x: &FeatureMatrix,
    y: &LabelVector,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, label) in x.rows().zip(y.iter()) {
        let z = dot(weights, row) + bias;
        let target = f64::from(label);
        loss += log_loss_from_logit(z, target);
        let residual = sigmoid(z) - target;
        for (g, v) in grad_w.iter_mut().zip(row) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    loss /= n;
    grad_b /= n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent from zero weights. The seed is unused: the
/// procedure has no random component.
pub fn fit_logistic(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &LogisticHyper,
    _seed: u64,
) -> Result<LogisticModel, LearnerError> {
    check_fit_input(x, y)?;
    let mut weights = vec![0.0; x.n_features()];
    let mut bias = 0.0;
    for epoch in 0..hyper.epochs {
        let (loss, grad_w, grad_b) = logistic_loss_and_gradient(&weights, bias, x, y, hyper.l2);
        if !loss.is_finite() {
            return Err(LearnerError::NonFiniteLoss { epoch });
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= hyper.learning_rate * g;
        }
        bias -= hyper.learning_rate * grad_b;
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(LearnerError::NonFiniteLoss { epoch });
        }
    }
    Ok(LogisticModel {
        weights,
        bias,
        hyper: hyper.clone(),
    })
}

impl LogisticModel {
    pub fn decision_function(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_features(), x)?;
        Ok(x.rows().map(|r| sigmoid(self.decision_function(r))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn separable_1d() -> (FeatureMatrix, LabelVector) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }]).collect();
        let labels = (0..40).map(|i| (i % 2) as u8).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), LabelVector::new(labels).unwrap())
    }

    #[test]
    fn fits_separable_data() {
        let (x, y) = separable_1d();
        let model = fit_logistic(&x, &y, &LogisticHyper::default(), 0).unwrap();
        assert_eq!(model.predict(&x, 0.5).unwrap(), y);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn zero_epochs_gives_half() {
        let (x, y) = separable_1d();
        let hyper = LogisticHyper {
            epochs: 0,
            ..Default::default()
        };
        let model = fit_logistic(&x, &y, &hyper, 0).unwrap();
        assert_eq!(model.weights, vec![0.0]);
        let zeros = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        assert_eq!(model.predict_proba(&zeros).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from_seed(5);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = LabelVector::new((0..30).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let l2 = 0.01;
        let (_, gw, gb) = logistic_loss_and_gradient(&w, b, &x, &y, l2);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
        for j in 0..4 {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let numeric = (logistic_loss_and_gradient(&wp, b, &x, &y, l2).0
                - logistic_loss_and_gradient(&wm, b, &x, &y, l2).0)
                / (2.0 * h);
            assert!(rel(gw[j], numeric) < 1e-4, "w{j}: {} vs {numeric}", gw[j]);
        }
        let numeric = (logistic_loss_and_gradient(&w, b + h, &x, &y, l2).0
            - logistic_loss_and_gradient(&w, b - h, &x, &y, l2).0)
            / (2.0 * h);
        assert!(rel(gb, numeric) < 1e-4);
    }

    #[test]
    fn width_is_checked() {
        let (x, y) = separable_1d();
        let model = fit_logistic(&x, &y, &LogisticHyper::default(), 0).unwrap();
        let wide = FeatureMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            model.predict_proba(&wide),
            Err(LearnerError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }
}
