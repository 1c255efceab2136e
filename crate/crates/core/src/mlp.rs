//! The student: a tanh feed-forward network with a softmax output, trained
//! by minibatch SGD on the cross-entropy against teacher topic mixtures.
//!
//! Two shapes are supported. With K output topics, [`Variant::TwoLayer`] has
//! one hidden layer of 2K units and [`Variant::ThreeLayer`] has hidden
//! layers of 3K and 2K units.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixture::TopicMixture;
use crate::special::log_sum_exp;
use crate::text::TfVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    TwoLayer,
    ThreeLayer,
}

impl Variant {
    pub fn hidden_multipliers(self) -> &'static [usize] {
        match self {
            Variant::TwoLayer => &[2],
            Variant::ThreeLayer => &[3, 2],
        }
    }

    /// Short tag used on the command line and in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Variant::TwoLayer => "2l",
            Variant::ThreeLayer => "3l",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2l" | "twolayer" | "two_layer" => Ok(Variant::TwoLayer),
            "3l" | "threelayer" | "three_layer" => Ok(Variant::ThreeLayer),
            other => Err(Error::InvalidArgument(format!("unknown network variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub variant: Variant,
    /// Vocabulary size V.
    pub input_dim: usize,
    /// Topic count K.
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(variant: Variant, input_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "network dimensions must be positive (V={input_dim}, K={output_dim})"
            )));
        }
        Ok(Self { variant, input_dim, output_dim })
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.variant.hidden_multipliers().iter().map(|m| m * self.output_dim).collect()
    }

    /// `(rows, cols)` of every weight matrix, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(self.hidden_dims());
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// Scaling applied to the TF counts before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputNorm {
    /// Raw counts.
    #[default]
    None,
    /// Counts divided by the document's total.
    L1,
}

impl core::str::FromStr for InputNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InputNorm::None),
            "l1" => Ok(InputNorm::L1),
            other => Err(Error::InvalidArgument(format!("unknown input normalization {other:?}"))),
        }
    }
}

/// One affine map: `weights` is out×in.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { weights: Matrix::zeros(rows, cols), bias: vec![0.0; rows] }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(&self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    arch: MlpArchitecture,
    layers: Vec<Layer>,
    input_norm: InputNorm,
}

impl MlpModel {
    /// Checks that the layer shapes chain from V through the hidden sizes
    /// to K and that every parameter is finite.
    pub fn from_layers(arch: MlpArchitecture, layers: Vec<Layer>, input_norm: InputNorm) -> Result<Self> {
        let shapes = arch.layer_shapes();
        if layers.len() != shapes.len() {
            return Err(Error::DimensionMismatch { expected: shapes.len(), found: layers.len() });
        }
        for (layer, &(rows, cols)) in layers.iter().zip(&shapes) {
            if layer.weights.rows() != rows || layer.bias.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: layer.weights.rows() });
            }
            if layer.weights.cols() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: layer.weights.cols() });
            }
            if layer.params().any(|p| !p.is_finite()) {
                return Err(Error::Domain("network parameters must be finite".into()));
            }
        }
        Ok(Self { arch, layers, input_norm })
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_norm(&self) -> InputNorm {
        self.input_norm
    }

    pub fn with_input_norm(mut self, norm: InputNorm) -> Self {
        self.input_norm = norm;
        self
    }

    /// Mutable access to the parameters, for tests and hand-built models.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    fn sparse_input(&self, v: &TfVector) -> Result<Vec<(usize, f64)>> {
        v.check_dim(self.arch.input_dim)?;
        let scale = match self.input_norm {
            InputNorm::L1 if v.total() > 0 => 1.0 / v.total() as f64,
            _ => 1.0,
        };
        Ok(v.entries().iter().map(|&(i, c)| (i, f64::from(c) * scale)).collect())
    }

    /// Hidden activations (post-tanh, one vector per hidden layer) and
    /// output logits for a sparse input.
    pub(crate) fn forward_sparse(&self, input: &[(usize, f64)]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let first = &self.layers[0];
        let mut z = first.bias.clone();
        for (j, zj) in z.iter_mut().enumerate() {
            let row = first.weights.row(j);
            for &(i, x) in input {
                *zj += row[i] * x;
            }
        }
        let mut hidden = Vec::with_capacity(self.layers.len() - 1);
        for layer in &self.layers[1..] {
            let h: Vec<f64> = z.iter().map(|x| libm::tanh(*x)).collect();
            z = affine(layer, &h);
            hidden.push(h);
        }
        (hidden, z)
    }
}

fn affine(layer: &Layer, x: &[f64]) -> Vec<f64> {
    layer
        .bias
        .iter()
        .enumerate()
        .map(|(j, b)| b + layer.weights.row(j).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
pub fn init_mlp(arch: MlpArchitecture, seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = arch
        .layer_shapes()
        .into_iter()
        .map(|(rows, cols)| {
            let limit = libm::sqrt(6.0 / (rows + cols) as f64);
            let mut layer = Layer::zeros(rows, cols);
            for w in layer.weights.as_mut_slice() {
                *w = rng.random_range(-limit..limit);
            }
            layer
        })
        .collect();
    MlpModel { arch, layers, input_norm: InputNorm::None }
}

/// The network's topic mixture for a document.
pub fn forward(model: &MlpModel, v: &TfVector) -> Result<TopicMixture> {
    let input = model.sparse_input(v)?;
    let (_, logits) = model.forward_sparse(&input);
    Ok(TopicMixture::from_vec_unchecked(softmax(&logits)))
}

/// −Σ target_i · ln prediction_i.
pub fn cross_entropy(target: &TopicMixture, prediction: &TopicMixture) -> Result<f64> {
    if target.len() != prediction.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), found: prediction.len() });
    }
    if let Some(p) = prediction.as_slice().iter().find(|p| **p <= 0.0) {
        return Err(Error::Domain(format!("prediction entry {p} is not positive")));
    }
    Ok(-target
        .as_slice()
        .iter()
        .zip(prediction.as_slice())
        .map(|(t, p)| t * libm::log(*p))
        .sum::<f64>())
}

// Cross-entropy from logits via log-softmax; stays finite when a softmax
// entry would underflow.
fn cross_entropy_logits(target: &[f64], logits: &[f64]) -> f64 {
    let lse = log_sum_exp(logits);
    -target.iter().zip(logits).map(|(t, z)| if *t == 0.0 { 0.0 } else { t * (z - lse) }).sum::<f64>()
}

/// Gradient of the mean batch loss with respect to every parameter, in the
/// same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self { layers: model.layers.iter().map(|l| Layer::zeros(l.weights.rows(), l.weights.cols())).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers.iter().flat_map(Layer::params).fold(0.0, |m, g| f64::max(m, g.abs()))
    }
}

fn check_pair(model: &MlpModel, target: &TopicMixture) -> Result<()> {
    let k = model.arch.output_dim;
    if target.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: target.len() });
    }
    Ok(())
}

/// Backpropagates one item, adding `scale` times its gradient into `grads`.
/// Returns the item's loss.
fn accumulate(model: &MlpModel, input: &[(usize, f64)], target: &[f64], grads: &mut Gradients, scale: f64) -> f64 {
    let (hidden, logits) = model.forward_sparse(input);
    let loss = cross_entropy_logits(target, &logits);
    // output pre-activation delta: f - theta
    let mut delta: Vec<f64> = softmax(&logits).iter().zip(target).map(|(f, t)| f - t).collect();
    for l in (0..model.layers.len()).rev() {
        let g = &mut grads.layers[l];
        for (gb, d) in g.bias.iter_mut().zip(&delta) {
            *gb += scale * d;
        }
        if l == 0 {
            for (j, d) in delta.iter().enumerate() {
                let row = g.weights.row_mut(j);
                for &(i, x) in input {
                    row[i] += scale * d * x;
                }
            }
            break;
        }
        let h = &hidden[l - 1];
        for (j, d) in delta.iter().enumerate() {
            for (gw, hv) in g.weights.row_mut(j).iter_mut().zip(h) {
                *gw += scale * d * hv;
            }
        }
        let w = &model.layers[l].weights;
        let mut back = vec![0.0; h.len()];
        for (j, d) in delta.iter().enumerate() {
            for (b, wv) in back.iter_mut().zip(w.row(j)) {
                *b += wv * d;
            }
        }
        delta = back.iter().zip(h).map(|(b, hv)| b * (1.0 - hv * hv)).collect();
    }
    loss
}

/// Mean over the batch of the gradient of the cross-entropy loss.
pub fn gradient(model: &MlpModel, batch: &[(TfVector, TopicMixture)]) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grads = Gradients::zeros_like(model);
    let scale = 1.0 / batch.len() as f64;
    for (v, target) in batch {
        check_pair(model, target)?;
        let input = model.sparse_input(v)?;
        accumulate(model, &input, target.as_slice(), &mut grads, scale);
    }
    Ok(grads)
}

/// Mean cross-entropy of the network's predictions against the targets.
pub fn mean_loss(model: &MlpModel, pairs: &[(TfVector, TopicMixture)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut total = 0.0;
    for (v, target) in pairs {
        check_pair(model, target)?;
        let (_, logits) = model.forward_sparse(&model.sparse_input(v)?);
        total += cross_entropy_logits(target.as_slice(), &logits);
    }
    Ok(total / pairs.len() as f64)
}

/// SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Learning-rate multiplier applied after every epoch.
    pub lr_decay: f64,
    pub shuffle: bool,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 100,
            batch_size: 16,
            seed: 0,
            lr_decay: 0.98,
            shuffle: true,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be at least 1".into()));
        }
        if !(self.lr_decay > 0.0) || !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument("invalid decay, momentum or weight decay".into()));
        }
        Ok(())
    }
}

/// Mean losses recorded at the end of every epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub train: Vec<f64>,
    /// Empty when no validation pairs were given.
    pub validation: Vec<f64>,
}

/// Trains a copy of `model` with minibatch SGD and returns it with the
/// per-epoch loss history. Single-threaded and bit-for-bit reproducible
/// for a fixed `config.seed`.
pub fn train_sgd(
    model: &MlpModel,
    train_pairs: &[(TfVector, TopicMixture)],
    config: &TrainConfig,
    validation_pairs: &[(TfVector, TopicMixture)],
) -> Result<(MlpModel, LossHistory)> {
    config.validate()?;
    if train_pairs.is_empty() {
        return Err(Error::InvalidArgument("no training pairs".into()));
    }
    let mut model = model.clone();
    let prepare = |pairs: &[(TfVector, TopicMixture)]| -> Result<Vec<Vec<(usize, f64)>>> {
        pairs
            .iter()
            .map(|(v, t)| {
                check_pair(&model, t)?;
                model.sparse_input(v)
            })
            .collect()
    };
    let inputs = prepare(train_pairs)?;
    let val_inputs = prepare(validation_pairs)?;
    let dense_update = config.momentum != 0.0 || config.weight_decay != 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut grads = Gradients::zeros_like(&model);
    let mut velocity = dense_update.then(|| Gradients::zeros_like(&model));
    let mut touched: Vec<usize> = Vec::new();
    let mut lr = config.learning_rate;
    let mut history = LossHistory::default();

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            touched.clear();
            for &idx in batch {
                touched.extend(inputs[idx].iter().map(|(i, _)| *i));
                accumulate(&model, &inputs[idx], train_pairs[idx].1.as_slice(), &mut grads, scale);
            }
            touched.sort_unstable();
            touched.dedup();
            match velocity.as_mut() {
                Some(vel) => step_dense(&mut model, &mut grads, vel, lr, config),
                None => step_sparse(&mut model, &mut grads, &touched, lr),
            }
        }
        lr *= config.lr_decay;

        let train_loss = mean_over(&model, &inputs, train_pairs);
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1 });
        }
        history.train.push(train_loss);
        if !val_inputs.is_empty() {
            history.validation.push(mean_over(&model, &val_inputs, validation_pairs));
        }
        log::debug!("epoch {}: train loss {train_loss}", epoch + 1);
    }
    Ok((model, history))
}

fn mean_over(model: &MlpModel, inputs: &[Vec<(usize, f64)>], pairs: &[(TfVector, TopicMixture)]) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(pairs)
        .map(|(x, (_, t))| cross_entropy_logits(t.as_slice(), &model.forward_sparse(x).1))
        .sum();
    total / inputs.len() as f64
}

// Plain SGD: only first-layer columns of words present in the batch have a
// nonzero gradient, so only those are updated and cleared.
fn step_sparse(model: &mut MlpModel, grads: &mut Gradients, touched: &[usize], lr: f64) {
    let (first_model, rest_model) = model.layers.split_at_mut(1);
    let (first_grad, rest_grad) = grads.layers.split_at_mut(1);
    let (w, g) = (&mut first_model[0], &mut first_grad[0]);
    for j in 0..w.weights.rows() {
        let (wr, gr) = (w.weights.row_mut(j), g.weights.row_mut(j));
        for &i in touched {
            wr[i] -= lr * gr[i];
            gr[i] = 0.0;
        }
    }
    for (b, gb) in w.bias.iter_mut().zip(g.bias.iter_mut()) {
        *b -= lr * *gb;
        *gb = 0.0;
    }
    for (layer, grad) in rest_model.iter_mut().zip(rest_grad.iter_mut()) {
        let params = layer.weights.as_mut_slice().iter_mut().chain(layer.bias.iter_mut());
        let gparams = grad.weights.as_mut_slice().iter_mut().chain(grad.bias.iter_mut());
        for (p, g) in params.zip(gparams) {
            *p -= lr * *g;
            *g = 0.0;
        }
    }
}

fn step_dense(model: &mut MlpModel, grads: &mut Gradients, velocity: &mut Gradients, lr: f64, config: &TrainConfig) {
    for ((layer, grad), vel) in model.layers.iter_mut().zip(&mut grads.layers).zip(&mut velocity.layers) {
        let params = layer.weights.as_mut_slice().iter_mut().chain(layer.bias.iter_mut());
        let gparams = grad.weights.as_mut_slice().iter_mut().chain(grad.bias.iter_mut());
        let vparams = vel.weights.as_mut_slice().iter_mut().chain(vel.bias.iter_mut());
        for ((p, g), v) in params.zip(gparams).zip(vparams) {
            *v = config.momentum * *v - lr * (*g + config.weight_decay * *p);
            *p += *v;
            *g = 0.0;
        }
    }
}
