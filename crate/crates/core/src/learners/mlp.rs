//! Multilayer perceptron with batch normalization and inverted dropout.
//!
//! Hidden layer: affine -> batch norm -> ReLU -> dropout. Output layer:
//! affine -> sigmoid. Trained by mini-batch gradient descent on the mean
//! binary cross-entropy with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::history::{EpochRecord, TrainingHistory};
use super::{check_fit_input, check_width, log_loss_from_logit, sigmoid, Classifier, LearnerError};
use crate::preprocess::stratified_split;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::table::{FeatureMatrix, LabelVector};
use crate::training::{EarlyStopConfig, EarlyStopDecision, EarlyStopping, PlateauConfig, PlateauScheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// SGD with classical momentum.
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyper {
    pub hidden_layers: Vec<usize>,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub momentum: f64,
    /// Fraction of the training rows held out for validation.
    pub validation_fraction: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub early_stopping: Option<EarlyStopConfig>,
    pub plateau: Option<PlateauConfig>,
    /// Mean loss above which training counts as diverged. A constant 0.5
    /// predictor scores about 0.69; double precision would otherwise carry
    /// exploding losses far past the point of recovery.
    pub divergence_loss: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden_layers: vec![1024, 512, 256, 128],
            dropout: 0.3,
            batch_size: 32,
            max_epochs: 100,
            learning_rate: 1e-3,
            optimizer: Optimizer::Sgd,
            momentum: 0.9,
            validation_fraction: 0.1,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
            early_stopping: Some(EarlyStopConfig::default()),
            plateau: Some(PlateauConfig::default()),
            divergence_loss: 1e6,
        }
    }
}

impl MlpHyper {
    fn validate(&self) -> Result<(), LearnerError> {
        if self.batch_size < 2 {
            return Err(LearnerError::BatchTooSmall(self.batch_size));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(LearnerError::InvalidHyper(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(LearnerError::InvalidHyper(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if self.hidden_layers.contains(&0) {
            return Err(LearnerError::InvalidHyper("hidden layer of width 0".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(LearnerError::InvalidHyper("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    /// `fan_in x fan_out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLayer {
    /// `fan_in x 1`
    pub weights: Array2<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden: Vec<HiddenLayer>,
    pub output: OutputLayer,
    pub dropout: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running-stat updates, dropout.
    Train,
    /// Running statistics, no dropout.
    Infer,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    normalized: Array2<f64>,
    /// Scaled keep-mask (`0` or `1 / (1 - p)`).
    mask: Option<Array2<f64>>,
}

/// Intermediate activations of one forward pass, consumed by [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    layers: Vec<LayerCache>,
    last_hidden: Array2<f64>,
    pub logits: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<HiddenGrads>,
    pub output_weights: Array2<f64>,
    pub output_bias: Array1<f64>,
}

impl Gradients {
    /// Same order as [`MlpModel::params_mut`].
    pub fn views(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut views = Vec::with_capacity(4 * self.hidden.len() + 2);
        for g in &self.hidden {
            views.push(g.weights.view().into_dyn());
            views.push(g.bias.view().into_dyn());
            views.push(g.gamma.view().into_dyn());
            views.push(g.beta.view().into_dyn());
        }
        views.push(self.output_weights.view().into_dyn());
        views.push(self.output_bias.view().into_dyn());
        views
    }
}

fn uniform_matrix(rows: usize, cols: usize, limit: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..=limit))
}

fn to_array(x: &FeatureMatrix) -> Array2<f64> {
    Array2::from_shape_vec((x.n_rows(), x.n_features()), x.values().to_vec()).expect("matrix shape")
}

/// Mean binary cross-entropy of logits against 0/1 targets.
pub fn mean_bce(logits: &Array1<f64>, targets: &Array1<f64>) -> f64 {
    logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| log_loss_from_logit(z, t))
        .sum::<f64>()
        / logits.len() as f64
}

impl MlpModel {
    /// He-uniform hidden weights, Xavier-uniform output weights, zero biases,
    /// identity batch-norm.
    pub fn new(n_inputs: usize, hidden_layers: &[usize], hyper: &MlpHyper, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut fan_in = n_inputs;
        let mut hidden = Vec::with_capacity(hidden_layers.len());
        for &width in hidden_layers {
            let limit = (6.0 / fan_in as f64).sqrt();
            hidden.push(HiddenLayer {
                weights: uniform_matrix(fan_in, width, limit, &mut rng),
                bias: Array1::zeros(width),
                gamma: Array1::ones(width),
                beta: Array1::zeros(width),
                running_mean: Array1::zeros(width),
                running_var: Array1::ones(width),
            });
            fan_in = width;
        }
        let limit = (6.0 / (fan_in + 1) as f64).sqrt();
        Self {
            hidden,
            output: OutputLayer {
                weights: uniform_matrix(fan_in, 1, limit, &mut rng),
                bias: 0.0,
            },
            dropout: hyper.dropout,
            bn_momentum: hyper.bn_momentum,
            bn_epsilon: hyper.bn_epsilon,
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self.hidden.first() {
            Some(layer) => layer.weights.nrows(),
            None => self.output.weights.nrows(),
        }
    }

    /// Learnable arrays in a fixed order: per hidden layer W, b, gamma, beta;
    /// then output W and b.
    pub fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut views = Vec::with_capacity(4 * self.hidden.len() + 2);
        for layer in &mut self.hidden {
            views.push(layer.weights.view_mut().into_dyn());
            views.push(layer.bias.view_mut().into_dyn());
            views.push(layer.gamma.view_mut().into_dyn());
            views.push(layer.beta.view_mut().into_dyn());
        }
        views.push(self.output.weights.view_mut().into_dyn());
        views.push(ArrayViewMutD::from_shape(ndarray::IxDyn(&[1]), std::slice::from_mut(&mut self.output.bias))
            .expect("scalar view"));
        views
    }

    fn all_finite(&self) -> bool {
        self.hidden.iter().all(|l| {
            l.weights.iter().chain(&l.bias).chain(&l.gamma).chain(&l.beta).all(|v| v.is_finite())
        }) && self.output.weights.iter().all(|v| v.is_finite())
            && self.output.bias.is_finite()
    }

    /// Forward pass. Train mode needs at least two rows, updates the running
    /// statistics and draws dropout masks from `rng`.
    pub fn forward(
        &mut self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<ForwardCache, LearnerError> {
        if x.ncols() != self.n_inputs() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_inputs(),
                found: x.ncols(),
            });
        }
        if mode == Mode::Train && x.nrows() < 2 {
            return Err(LearnerError::BatchTooSmall(x.nrows()));
        }
        let eps = self.bn_epsilon;
        let keep = 1.0 - self.dropout;
        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut activation = x.to_owned();
        for layer in &mut self.hidden {
            let z = activation.dot(&layer.weights) + &layer.bias;
            let (mean, var) = match mode {
                Mode::Train => {
                    let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                    let var = z.var_axis(Axis(0), 0.0);
                    let m = self.bn_momentum;
                    layer.running_mean = &layer.running_mean * m + &mean * (1.0 - m);
                    layer.running_var = &layer.running_var * m + &var * (1.0 - m);
                    (mean, var)
                }
                Mode::Infer => (layer.running_mean.clone(), layer.running_var.clone()),
            };
            let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
            let x_hat = (&z - &mean) * &inv_std;
            let normalized = &x_hat * &layer.gamma + &layer.beta;
            let mut next = normalized.mapv(|v| v.max(0.0));
            let mask = if mode == Mode::Train && self.dropout > 0.0 {
                let mask = Array2::from_shape_fn(next.raw_dim(), |_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                next *= &mask;
                Some(mask)
            } else {
                None
            };
            layers.push(LayerCache {
                input: activation,
                x_hat,
                inv_std,
                normalized,
                mask,
            });
            activation = next;
        }
        let logits = activation.dot(&self.output.weights).column(0).to_owned() + self.output.bias;
        Ok(ForwardCache {
            mode,
            layers,
            last_hidden: activation,
            logits,
        })
    }

    /// Gradients of the mean binary cross-entropy for the pass in `cache`.
    pub fn backward(&self, cache: &ForwardCache, targets: &Array1<f64>) -> Gradients {
        let n = cache.logits.len() as f64;
        let d_logits: Array1<f64> =
            Zip::from(&cache.logits).and(targets).map_collect(|&z, &t| (sigmoid(z) - t) / n);
        let d_col = d_logits.view().insert_axis(Axis(1));
        let output_weights = cache.last_hidden.t().dot(&d_col);
        let output_bias = Array1::from_elem(1, d_logits.sum());
        let mut upstream = d_col.dot(&self.output.weights.t());

        let mut hidden = vec![None; self.hidden.len()];
        for (index, (layer, lc)) in self.hidden.iter().zip(&cache.layers).enumerate().rev() {
            if let Some(mask) = &lc.mask {
                upstream *= mask;
            }
            let d_norm = Zip::from(&upstream)
                .and(&lc.normalized)
                .map_collect(|&g, &v| if v > 0.0 { g } else { 0.0 });
            let beta = d_norm.sum_axis(Axis(0));
            let gamma = (&d_norm * &lc.x_hat).sum_axis(Axis(0));
            let d_xhat = &d_norm * &layer.gamma;
            let d_z = match cache.mode {
                Mode::Train => {
                    let sum = d_xhat.sum_axis(Axis(0));
                    let sum_dot = (&d_xhat * &lc.x_hat).sum_axis(Axis(0));
                    let centred = &d_xhat * n - &sum - &lc.x_hat * &sum_dot;
                    centred * &(&lc.inv_std / n)
                }
                Mode::Infer => &d_xhat * &lc.inv_std,
            };
            let weights = lc.input.t().dot(&d_z);
            let bias = d_z.sum_axis(Axis(0));
            upstream = d_z.dot(&layer.weights.t());
            hidden[index] = Some(HiddenGrads {
                weights,
                bias,
                gamma,
                beta,
            });
        }
        Gradients {
            hidden: hidden.into_iter().map(|g| g.expect("every layer visited")).collect(),
            output_weights,
            output_bias,
        }
    }

    /// Deterministic inference in chunks.
    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        const CHUNK: usize = 4096;
        let mut out = Array1::zeros(x.nrows());
        let mut scratch = self.clone();
        let mut rng = rng_from_seed(0);
        for start in (0..x.nrows()).step_by(CHUNK) {
            let end = (start + CHUNK).min(x.nrows());
            let cache = scratch
                .forward(x.slice(ndarray::s![start..end, ..]), Mode::Infer, &mut rng)
                .expect("width checked by caller");
            out.slice_mut(ndarray::s![start..end])
                .assign(&cache.logits.mapv(sigmoid));
        }
        out
    }
}

/// Forward pass over a feature matrix; returns probabilities and the cache.
pub fn mlp_forward(
    model: &mut MlpModel,
    x: &FeatureMatrix,
    mode: Mode,
    seed: u64,
) -> Result<(Vec<f64>, ForwardCache), LearnerError> {
    let mut rng = rng_from_seed(seed);
    let cache = model.forward(to_array(x).view(), mode, &mut rng)?;
    Ok((cache.logits.iter().map(|&z| sigmoid(z)).collect(), cache))
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.n_inputs()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        check_width(self.n_inputs(), x)?;
        Ok(self.infer(to_array(x).view()).to_vec())
    }
}

enum OptimizerState {
    Sgd { velocity: Vec<ndarray::ArrayD<f64>> },
    Adam { m: Vec<ndarray::ArrayD<f64>>, v: Vec<ndarray::ArrayD<f64>>, t: i32 },
}

impl OptimizerState {
    fn new(kind: Optimizer, model: &mut MlpModel) -> Self {
        let zeros: Vec<_> = model
            .params_mut()
            .iter()
            .map(|p| ndarray::ArrayD::zeros(p.raw_dim()))
            .collect();
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd { velocity: zeros },
            Optimizer::Adam => OptimizerState::Adam {
                m: zeros.clone(),
                v: zeros,
                t: 0,
            },
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64, momentum: f64) {
        let grad_views = grads.views();
        match self {
            OptimizerState::Sgd { velocity } => {
                for ((mut param, grad), vel) in model.params_mut().into_iter().zip(grad_views).zip(velocity) {
                    Zip::from(&mut *vel).and(&grad).for_each(|v, &g| *v = momentum * *v - lr * g);
                    param += &*vel;
                }
            }
            OptimizerState::Adam { m, v, t } => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                *t += 1;
                let c1 = 1.0 - B1.powi(*t);
                let c2 = 1.0 - B2.powi(*t);
                for (((mut param, grad), m), v) in model.params_mut().into_iter().zip(grad_views).zip(m).zip(v) {
                    Zip::from(&mut param).and(&mut *m).and(&mut *v).and(&grad).for_each(|p, m, v, &g| {
                        *m = B1 * *m + (1.0 - B1) * g;
                        *v = B2 * *v + (1.0 - B2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + 1e-7);
                    });
                }
            }
        }
    }
}

/// Mini-batch indices; a trailing single row joins the previous batch.
fn batches(order: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(batch_size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() < 2) {
        out.pop();
        let start = (out.len() - 1) * batch_size;
        *out.last_mut().expect("at least one batch") = &order[start..];
    }
    out
}

fn accuracy_of(logits: &Array1<f64>, targets: &Array1<f64>) -> f64 {
    let correct = logits
        .iter()
        .zip(targets)
        .filter(|(&z, &t)| (sigmoid(z) >= 0.5) == (t == 1.0))
        .count();
    correct as f64 / logits.len() as f64
}

/// Trains on `x`/`y`, holding out a stratified validation fraction that
/// drives the callbacks. On early stop, and at the end of training when early
/// stopping is configured, the weights of the best validation epoch are
/// restored.
pub fn fit_mlp(
    x: &FeatureMatrix,
    y: &LabelVector,
    hyper: &MlpHyper,
    seed: u64,
) -> Result<(MlpModel, TrainingHistory), LearnerError> {
    check_fit_input(x, y)?;
    hyper.validate()?;
    let split = stratified_split(y, hyper.validation_fraction, derive_seed(seed, 1))
        .map_err(|e| LearnerError::InvalidHyper(format!("validation split: {e}")))?;
    if split.train_rows.len() < 2 {
        return Err(LearnerError::BatchTooSmall(split.train_rows.len()));
    }
    let x_all = to_array(x);
    let targets_all: Array1<f64> = y.iter().map(f64::from).collect();
    let x_val = x_all.select(Axis(0), &split.test_rows);
    let y_val = targets_all.select(Axis(0), &split.test_rows);

    let mut model = MlpModel::new(x.n_features(), &hyper.hidden_layers, hyper, derive_seed(seed, 0));
    let mut optimizer = OptimizerState::new(hyper.optimizer, &mut model);
    let mut rng = rng_from_seed(derive_seed(seed, 2));
    let mut early = hyper.early_stopping.map(EarlyStopping::new);
    let mut plateau = hyper.plateau.map(|c| PlateauScheduler::new(hyper.learning_rate, c));
    let mut lr = hyper.learning_rate;
    let mut history = TrainingHistory::default();
    let mut order = split.train_rows.clone();

    for epoch in 0..hyper.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct_sum) = (0.0, 0.0);
        for batch in batches(&order, hyper.batch_size) {
            let xb = x_all.select(Axis(0), batch);
            let yb = targets_all.select(Axis(0), batch);
            let cache = model.forward(xb.view(), Mode::Train, &mut rng)?;
            let rows = batch.len() as f64;
            loss_sum += mean_bce(&cache.logits, &yb) * rows;
            correct_sum += accuracy_of(&cache.logits, &yb) * rows;
            let grads = model.backward(&cache, &yb);
            optimizer.step(&mut model, &grads, lr, hyper.momentum);
        }
        let n_train = order.len() as f64;
        let train_loss = loss_sum / n_train;
        let val_cache = model.forward(x_val.view(), Mode::Infer, &mut rng)?;
        let val_loss = mean_bce(&val_cache.logits, &y_val);
        let diverged = |loss: f64| !(loss <= hyper.divergence_loss);
        if diverged(train_loss) || diverged(val_loss) || !model.all_finite() {
            return Err(LearnerError::NonFiniteLoss { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_acc: correct_sum / n_train,
            val_loss,
            val_acc: accuracy_of(&val_cache.logits, &y_val),
            lr,
        });
        if let Some(early) = early.as_mut() {
            if let EarlyStopDecision::Stop { best_epoch, weights } = early.step(epoch, val_loss, &model) {
                log::debug!("early stop at epoch {epoch}, restoring epoch {best_epoch}");
                model = weights;
                history.restored_epoch = Some(best_epoch);
                return Ok((model, history));
            }
        }
        if let Some(plateau) = plateau.as_mut() {
            lr = plateau.step(epoch, val_loss);
        }
    }
    if let Some(early) = early {
        if let Some((best_epoch, weights)) = early.into_best() {
            model = weights;
            history.restored_epoch = Some(best_epoch);
        }
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn random_batch(n: usize, d: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
        let mut rng = rng_from_seed(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| f64::from(rng.random_range(0..2u8)));
        (x, y)
    }

    fn tiny(dropout: f64) -> MlpModel {
        let hyper = MlpHyper {
            dropout,
            ..Default::default()
        };
        MlpModel::new(7, &[8, 4], &hyper, 3)
    }

    fn loss_at(model: &MlpModel, x: &Array2<f64>, y: &Array1<f64>, mode: Mode) -> f64 {
        let mut scratch = model.clone();
        let cache = scratch.forward(x.view(), mode, &mut rng_from_seed(0)).unwrap();
        mean_bce(&cache.logits, y)
    }

    fn check_gradients(mode: Mode) {
        let mut model = tiny(0.0);
        let (x, y) = random_batch(16, 7, 8);
        let mut rng = rng_from_seed(0);
        for _ in 0..5 {
            model.forward(x.view(), Mode::Train, &mut rng).unwrap();
        }
        for layer in &mut model.hidden {
            layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            layer.gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
            layer.beta.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let cache = model.clone().forward(x.view(), mode, &mut rng).unwrap();
        let grads = model.backward(&cache, &y);
        let analytic: Vec<Vec<f64>> = grads.views().iter().map(|g| g.iter().copied().collect()).collect();

        let h = 1e-5;
        let n_slots = analytic.len();
        let mut worst: f64 = 0.0;
        for slot in 0..n_slots {
            for k in 0..analytic[slot].len() {
                let mut plus = model.clone();
                *plus.params_mut()[slot].iter_mut().nth(k).unwrap() += h;
                let mut minus = model.clone();
                *minus.params_mut()[slot].iter_mut().nth(k).unwrap() -= h;
                let numeric = (loss_at(&plus, &x, &y, mode) - loss_at(&minus, &x, &y, mode)) / (2.0 * h);
                let a = analytic[slot][k];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "{mode:?}: worst relative error {worst}");
    }

    #[test]
    fn gradients_match_central_differences_in_train_mode() {
        check_gradients(Mode::Train);
    }

    #[test]
    fn gradients_match_central_differences_in_infer_mode() {
        check_gradients(Mode::Infer);
    }

    fn blobs(n: usize, seed: u64) -> (FeatureMatrix, LabelVector) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let centre = if label == 1 { 1.5 } else { -1.5 };
            rows.push((0..7).map(|_| centre + rng.random_range(-1.0..1.0)).collect());
            labels.push(label);
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), LabelVector::new(labels).unwrap())
    }

    #[test]
    fn learns_separable_blobs() {
        let (x, y) = blobs(400, 1);
        let hyper = MlpHyper {
            hidden_layers: vec![32, 16],
            max_epochs: 20,
            ..Default::default()
        };
        let (model, history) = fit_mlp(&x, &y, &hyper, 5).unwrap();
        let last = history.records.last().unwrap();
        assert!(last.val_acc >= 0.95, "val acc {}", last.val_acc);
        let predicted = model.predict(&x, 0.5).unwrap();
        let correct = predicted.iter().zip(y.iter()).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / 400.0 >= 0.95);
    }

    #[test]
    fn fit_is_reproducible() {
        let (x, y) = blobs(120, 2);
        let hyper = MlpHyper {
            hidden_layers: vec![16, 8],
            max_epochs: 5,
            ..Default::default()
        };
        let (a, ha) = fit_mlp(&x, &y, &hyper, 9).unwrap();
        let (b, hb) = fit_mlp(&x, &y, &hyper, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn early_stop_restores_best_epoch() {
        let (x, y) = blobs(120, 3);
        let hyper = MlpHyper {
            hidden_layers: vec![16],
            max_epochs: 50,
            early_stopping: Some(EarlyStopConfig {
                patience: 1,
                min_delta: 10.0,
            }),
            ..Default::default()
        };
        let (model, history) = fit_mlp(&x, &y, &hyper, 1).unwrap();
        assert_eq!(history.len(), 2);
        assert_eq!(history.restored_epoch, Some(0));
        let mut replay = hyper.clone();
        replay.max_epochs = 1;
        replay.early_stopping = None;
        let (first_epoch, _) = fit_mlp(&x, &y, &replay, 1).unwrap();
        assert_eq!(model, first_epoch);
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let (x, y) = blobs(200, 4);
        let hyper = MlpHyper {
            hidden_layers: vec![64, 32],
            learning_rate: 1e3,
            max_epochs: 30,
            ..Default::default()
        };
        assert!(matches!(fit_mlp(&x, &y, &hyper, 0), Err(LearnerError::NonFiniteLoss { epoch: 0 })));
    }

    #[test]
    fn zero_network_outputs_half() {
        let mut model = tiny(0.3);
        for mut p in model.params_mut() {
            p.fill(0.0);
        }
        for layer in &mut model.hidden {
            layer.gamma.fill(1.0);
        }
        let (x, _) = random_batch(5, 7, 1);
        let p = model.infer(x.view());
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn no_dropout_and_batch_stats_make_train_equal_infer() {
        let mut model = tiny(0.0);
        model.bn_momentum = 0.0;
        let (x, _) = random_batch(16, 7, 2);
        let mut rng = rng_from_seed(0);
        let train = model.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let infer = model.forward(x.view(), Mode::Infer, &mut rng).unwrap();
        assert_eq!(train.logits, infer.logits);
    }

    #[test]
    fn running_stats_converge_to_batch_stats() {
        let mut model = tiny(0.0);
        let (x, _) = random_batch(32, 7, 4);
        let mut rng = rng_from_seed(0);
        let mut last = None;
        for _ in 0..300 {
            last = Some(model.forward(x.view(), Mode::Train, &mut rng).unwrap());
        }
        let train = last.unwrap().logits.mapv(sigmoid);
        let infer = model.infer(x.view());
        let max_diff = train.iter().zip(&infer).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_diff < 1e-3, "max diff {max_diff}");
    }

    #[test]
    fn dropout_changes_train_output_only() {
        let mut model = tiny(0.5);
        let (x, _) = random_batch(16, 7, 5);
        let mut rng = rng_from_seed(0);
        let a = model.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let b = model.forward(x.view(), Mode::Train, &mut rng).unwrap();
        assert_ne!(a.logits, b.logits);
        assert_eq!(model.infer(x.view()), model.infer(x.view()));
    }

    #[test]
    fn train_mode_needs_two_rows() {
        let mut model = tiny(0.0);
        let (x, _) = random_batch(1, 7, 6);
        let mut rng = rng_from_seed(0);
        assert!(matches!(
            model.forward(x.view(), Mode::Train, &mut rng),
            Err(LearnerError::BatchTooSmall(1))
        ));
        assert!(model.forward(x.view(), Mode::Infer, &mut rng).is_ok());
    }

    #[test]
    fn batching_merges_singletons() {
        let order: Vec<usize> = (0..65).collect();
        let b = batches(&order, 32);
        assert_eq!(b.iter().map(|b| b.len()).collect::<Vec<_>>(), vec![32, 33]);
        let order: Vec<usize> = (0..66).collect();
        assert_eq!(batches(&order, 32).len(), 3);
    }

    #[test]
    fn wrong_width() {
        let model = tiny(0.0);
        let x = FeatureMatrix::from_rows(&[vec![0.0; 3]]).unwrap();
        assert!(matches!(model.predict_proba(&x), Err(LearnerError::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_bad_hyper() {
        let x = FeatureMatrix::from_rows(&vec![vec![0.0; 7]; 20]).unwrap();
        let y = LabelVector::new((0..20).map(|i| (i % 2) as u8).collect()).unwrap();
        let small_batch = MlpHyper {
            batch_size: 1,
            ..Default::default()
        };
        assert!(matches!(fit_mlp(&x, &y, &small_batch, 0), Err(LearnerError::BatchTooSmall(1))));
        let bad_dropout = MlpHyper {
            dropout: 1.0,
            ..Default::default()
        };
        assert!(fit_mlp(&x, &y, &bad_dropout, 0).is_err());
    }
}
