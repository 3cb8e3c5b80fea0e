//! Plain feed-forward baseline network and the training loop shared by all
//! gradient-trained forecasters.
//!
//! Training is full-batch and deterministic: a chronological validation
//! split, Adam with bias correction, patience on strict validation
//! improvement, and a restore of the best-validation parameters at the end.
//! Nothing in here spawns threads, so two runs with the same seed produce
//! bitwise-identical parameters.

use std::path::Path;

use ndarray::{s, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};
use crate::kan::KanNetwork;
use crate::series::WindowDataset;

/// Fully connected network with relu hidden layers and a linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNetwork {
    widths: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Per-layer inputs and pre-activations captured by [`mlp_forward`].
#[derive(Clone, Debug)]
pub struct MlpCache {
    layer_inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Gradients in flat parameter order plus the input gradient.
#[derive(Clone, Debug)]
pub struct MlpGradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

impl MlpNetwork {
    /// Seeded He initialization: weights at N(0, sqrt(2 / fan_in)) drawn in
    /// flat parameter order (layers, then row-major entries), biases zero.
    pub fn init(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(ArkanError::InvalidConfig(
                "network needs at least input and output widths".into(),
            ));
        }
        if widths.iter().any(|w| *w == 0) {
            return Err(ArkanError::InvalidConfig(
                "every network width must be positive".into(),
            ));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (d_in, d_out) = (pair[0], pair[1]);
            let dist = Normal::new(0.0, (2.0 / d_in as f64).sqrt()).expect("positive std");
            weights.push(Array2::from_shape_fn((d_in, d_out), |_| dist.sample(&mut rng)));
            biases.push(Array1::zeros(d_out));
        }
        Ok(MlpNetwork {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn param_count(&self) -> usize {
        self.widths
            .windows(2)
            .map(|pair| pair[0] * pair[1] + pair[1])
            .sum()
    }

    /// Copies every parameter into one vector: layers in order, each layer
    /// as row-major weights followed by biases.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    /// Inverse of [`flatten_params`].
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(ArkanError::ShapeMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = flat[at];
                at += 1;
            }
            for v in b.iter_mut() {
                *v = flat[at];
                at += 1;
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    #[cfg(test)]
    pub(crate) fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub(crate) fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch_cached(x)?.0)
    }

    pub(crate) fn forward_batch_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        if x.ncols() != self.widths[0] {
            return Err(ArkanError::ShapeMismatch {
                expected: self.widths[0],
                got: x.ncols(),
            });
        }
        let last = self.weights.len() - 1;
        let mut cache = MlpCache {
            layer_inputs: Vec::with_capacity(self.weights.len()),
            pre_activations: Vec::with_capacity(self.weights.len()),
        };
        let mut current = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = current.dot(w);
            for mut row in z.rows_mut() {
                row += b;
            }
            cache.layer_inputs.push(current);
            cache.pre_activations.push(z.clone());
            if l < last {
                z.mapv_inplace(relu);
            }
            current = z;
        }
        Ok((current, cache))
    }

    /// Batched backward pass; returns flat parameter gradients.
    pub(crate) fn backward_batch(&self, cache: &MlpCache, out_grad: &Array2<f64>) -> Vec<f64> {
        self.backward_batch_full(cache, out_grad).0
    }

    fn backward_batch_full(
        &self,
        cache: &MlpCache,
        out_grad: &Array2<f64>,
    ) -> (Vec<f64>, Array2<f64>) {
        let mut flat = vec![0.0; self.param_count()];
        let mut offsets = Vec::with_capacity(self.weights.len());
        {
            let mut at = 0;
            for w in &self.weights {
                offsets.push(at);
                at += w.len() + w.ncols();
            }
        }
        let mut g = out_grad.clone();
        for (l, (w, _)) in self.weights.iter().zip(&self.biases).enumerate().rev() {
            let x = &cache.layer_inputs[l];
            let w_grad = x.t().dot(&g);
            let b_grad = g.sum_axis(ndarray::Axis(0));
            let at = offsets[l];
            for (dst, src) in flat[at..].iter_mut().zip(w_grad.iter().chain(b_grad.iter())) {
                *dst = *src;
            }
            g = g.dot(&w.t());
            if l > 0 {
                let z = &cache.pre_activations[l - 1];
                g.zip_mut_with(z, |gv, zv| {
                    if *zv <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
        }
        (flat, g)
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Evaluates the network on one input vector.
pub fn mlp_forward(net: &MlpNetwork, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
    let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("one row");
    let (out, cache) = net.forward_batch_cached(&x)?;
    Ok((out.row(0).to_vec(), cache))
}

/// Backpropagates `upstream` through a [`mlp_forward`] cache. The relu
/// subgradient at exactly zero is zero.
pub fn mlp_backward(net: &MlpNetwork, cache: &MlpCache, upstream: &[f64]) -> Result<MlpGradients> {
    let d_last = *net.widths.last().expect("validated widths");
    if upstream.len() != d_last {
        return Err(ArkanError::ShapeMismatch {
            expected: d_last,
            got: upstream.len(),
        });
    }
    let g = Array2::from_shape_vec((1, d_last), upstream.to_vec()).expect("one row");
    let (params, input) = net.backward_batch_full(cache, &g);
    Ok(MlpGradients {
        params,
        input: input.row(0).to_vec(),
    })
}

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse_loss(preds: &Array1<f64>, targets: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
    if preds.len() != targets.len() {
        return Err(ArkanError::ShapeMismatch {
            expected: targets.len(),
            got: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(ArkanError::EmptySeries);
    }
    let n = preds.len() as f64;
    let diff = preds - targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.mapv(|d| 2.0 * d / n);
    Ok((loss, grad))
}

/// Knobs for the shared training loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 3000,
            patience: 200,
            val_fraction: 0.2,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ArkanError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(ArkanError::InvalidConfig("max_epochs must be positive".into()));
        }
        if self.patience == 0 {
            return Err(ArkanError::InvalidConfig("patience must be positive".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(ArkanError::InvalidConfig(
                "val_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(beta >= 0.0 && beta < 1.0) {
                return Err(ArkanError::InvalidConfig(format!(
                    "{name} must lie in [0, 1)"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ArkanError::InvalidConfig(
                "epsilon must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// First and second moment accumulators for [`adam_step`].
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }
}

/// One Adam update with bias correction, in place.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(ArkanError::ShapeMismatch {
            expected: state.m.len(),
            got: if params.len() != state.m.len() {
                params.len()
            } else {
                grads.len()
            },
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let m_corr = 1.0 - config.beta1.powi(t);
    let v_corr = 1.0 - config.beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / m_corr;
        let v_hat = state.v[i] / v_corr;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

/// A model the shared training loop can optimize. Implementations must be
/// deterministic functions of their parameters.
pub trait Trainable {
    fn params_flat(&self) -> Vec<f64>;
    fn set_params_flat(&mut self, flat: &[f64]) -> Result<()>;
    /// Mean squared error over the batch and its parameter gradients.
    fn batch_loss_and_grads(&self, inputs: &Array2<f64>, targets: &Array1<f64>)
        -> Result<(f64, Vec<f64>)>;
    /// Mean squared error over the batch.
    fn batch_loss(&self, inputs: &Array2<f64>, targets: &Array1<f64>) -> Result<f64>;
    /// One prediction per input row.
    fn predict_batch(&self, inputs: &Array2<f64>) -> Result<Array1<f64>>;
}

fn squeeze_predictions(out: Array2<f64>) -> Result<Array1<f64>> {
    if out.ncols() != 1 {
        return Err(ArkanError::ShapeMismatch {
            expected: 1,
            got: out.ncols(),
        });
    }
    Ok(out.column(0).to_owned())
}

impl Trainable for KanNetwork {
    fn params_flat(&self) -> Vec<f64> {
        self.flatten_params()
    }

    fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        self.set_params(flat)
    }

    fn batch_loss_and_grads(
        &self,
        inputs: &Array2<f64>,
        targets: &Array1<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let (out, cache) = self.forward_batch_cached(inputs)?;
        let preds = squeeze_predictions(out)?;
        let (loss, grad) = mse_loss(&preds, targets)?;
        let g = grad.insert_axis(ndarray::Axis(1));
        Ok((loss, self.backward_batch(&cache, &g)))
    }

    fn batch_loss(&self, inputs: &Array2<f64>, targets: &Array1<f64>) -> Result<f64> {
        let preds = squeeze_predictions(self.forward_batch(inputs)?)?;
        Ok(mse_loss(&preds, targets)?.0)
    }

    fn predict_batch(&self, inputs: &Array2<f64>) -> Result<Array1<f64>> {
        squeeze_predictions(self.forward_batch(inputs)?)
    }
}

impl Trainable for MlpNetwork {
    fn params_flat(&self) -> Vec<f64> {
        self.flatten_params()
    }

    fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        self.set_params(flat)
    }

    fn batch_loss_and_grads(
        &self,
        inputs: &Array2<f64>,
        targets: &Array1<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let (out, cache) = self.forward_batch_cached(inputs)?;
        let preds = squeeze_predictions(out)?;
        let (loss, grad) = mse_loss(&preds, targets)?;
        let g = grad.insert_axis(ndarray::Axis(1));
        Ok((loss, self.backward_batch(&cache, &g)))
    }

    fn batch_loss(&self, inputs: &Array2<f64>, targets: &Array1<f64>) -> Result<f64> {
        let preds = squeeze_predictions(self.forward_batch(inputs)?)?;
        Ok(mse_loss(&preds, targets)?.0)
    }

    fn predict_batch(&self, inputs: &Array2<f64>) -> Result<Array1<f64>> {
        squeeze_predictions(self.forward_batch(inputs)?)
    }
}

/// Loss trace of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training loss per epoch, measured before that epoch's update.
    pub train_loss: Vec<f64>,
    /// Validation loss per epoch, measured after that epoch's update.
    pub val_loss: Vec<f64>,
    /// One-based epoch whose parameters the model kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }

    /// Writes `epoch,train_loss,val_loss` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
        let io_err = |e: csv::Error| ArkanError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        };
        writer
            .write_record(["epoch", "train_loss", "val_loss"])
            .map_err(io_err)?;
        for (i, (tr, va)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            writer
                .write_record([(i + 1).to_string(), tr.to_string(), va.to_string()])
                .map_err(io_err)?;
        }
        writer.flush().map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(())
    }
}

/// Full-batch training with a chronological validation split.
///
/// The most recent `val_fraction` of windows form the validation set. Every
/// epoch records the pre-update training loss and the post-update validation
/// loss; patience counts epochs without strict validation improvement, and
/// the parameters from the best validation epoch are restored before
/// returning.
pub fn train<M: Trainable>(
    model: &mut M,
    dataset: &WindowDataset,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    let total = dataset.len();
    if total < 2 {
        return Err(ArkanError::SeriesTooShort { len: total, min: 2 });
    }
    let n_val = ((config.val_fraction * total as f64 + 1e-9).floor() as usize).max(1);
    let n_train = total - n_val;
    if n_train == 0 {
        return Err(ArkanError::InvalidConfig(format!(
            "val_fraction {} leaves no training windows",
            config.val_fraction
        )));
    }

    let train_x = dataset.inputs.slice(s![..n_train, ..]).to_owned();
    let train_y = dataset.targets.slice(s![..n_train]).to_owned();
    let val_x = dataset.inputs.slice(s![n_train.., ..]).to_owned();
    let val_y = dataset.targets.slice(s![n_train..]).to_owned();

    let mut params = model.params_flat();
    let mut state = AdamState::new(params.len());
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stall = 0;
    let mut train_trace = Vec::new();
    let mut val_trace = Vec::new();

    for epoch in 1..=config.max_epochs {
        let (train_loss, grads) = model.batch_loss_and_grads(&train_x, &train_y)?;
        adam_step(&mut params, &grads, &mut state, config)?;
        model.set_params_flat(&params)?;
        let val_loss = model.batch_loss(&val_x, &val_y)?;
        train_trace.push(train_loss);
        val_trace.push(val_loss);
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(&params);
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    model.set_params_flat(&best_params)?;
    Ok(TrainHistory {
        train_loss: train_trace,
        val_loss: val_trace,
        best_epoch,
        best_val_loss: best_val,
    })
}
