//! Mini-batch SGD with optional momentum, weight decay, and a per-layer
//! trainable mask.

use rand::seq::SliceRandom;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, softmax_in_place, LayeredNet};
use crate::rng::{derive_seed, rng_from_seed, tag};
use crate::scalar::{cast, Scalar};

/// Hyperparameters for one training run.
///
/// `seed` drives the epoch shuffling stream (a dedicated ChaCha8 generator
/// derived from it), so identical configs replay identical batch orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Number of passes over the data; zero performs no update.
    pub epochs: usize,
    /// Clamped to the dataset size when larger.
    pub batch_size: usize,
    /// Zero is allowed and leaves parameters untouched.
    pub learning_rate: f64,
    /// Classic momentum coefficient in `[0, 1)`.
    pub momentum: f64,
    /// Coupled L2 penalty added to every gradient.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.1,
            momentum: 0.0,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidInput("learning_rate must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput("momentum must lie in [0, 1)".into()));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::InvalidInput("weight_decay must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Same config with a different seed; used to derive per-model streams.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// Per-layer gradient accumulators, same shapes as the net's parameters.
pub(crate) struct GradBuffers<S: Scalar> {
    pub weights: Vec<Vec<S>>,
    pub biases: Vec<Vec<S>>,
}

impl<S: Scalar> GradBuffers<S> {
    pub(crate) fn zeroed_like(net: &LayeredNet<S>) -> Self {
        Self {
            weights: net.layers().iter().map(|l| vec![S::zero(); l.weights().len()]).collect(),
            biases: net.layers().iter().map(|l| vec![S::zero(); l.biases().len()]).collect(),
        }
    }

    fn reset(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = S::zero());
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v = S::zero());
        }
    }
}

/// Scratch space reused across samples.
pub(crate) struct Workspace<S: Scalar> {
    /// Activations per layer boundary: `acts[0]` is the input, `acts[i+1]`
    /// the output of layer `i`.
    acts: Vec<Vec<S>>,
    delta: Vec<S>,
    delta_prev: Vec<S>,
}

impl<S: Scalar> Workspace<S> {
    pub(crate) fn for_net(net: &LayeredNet<S>) -> Self {
        let mut acts = Vec::with_capacity(net.num_layers() + 1);
        acts.push(vec![S::zero(); net.input_dim()]);
        for l in net.layers() {
            acts.push(vec![S::zero(); l.out_dim()]);
        }
        Self { acts, delta: Vec::new(), delta_prev: Vec::new() }
    }
}

/// Runs the forward pass storing activations, then accumulates the gradient
/// of the softmax cross-entropy loss into `grads`. Returns the sample loss.
pub(crate) fn backprop_sample<S: Scalar>(
    net: &LayeredNet<S>,
    x: &[S],
    label: usize,
    ws: &mut Workspace<S>,
    grads: &mut GradBuffers<S>,
) -> Result<S> {
    ws.acts[0].clear();
    ws.acts[0].extend_from_slice(x);
    for (i, layer) in net.layers().iter().enumerate() {
        let (before, after) = ws.acts.split_at_mut(i + 1);
        layer.apply(&before[i], &mut after[0]);
    }

    let last = ws.acts.last().expect("net has layers");
    let mut probs = last.clone();
    softmax_in_place(&mut probs);
    let loss = cross_entropy(&probs, label)?;

    // Combined softmax + cross-entropy gradient at the last activation.
    ws.delta.clear();
    for (i, &p) in probs.iter().enumerate() {
        let target = if i == label { S::one() } else { S::zero() };
        ws.delta.push(p - target);
    }

    for (i, layer) in net.layers().iter().enumerate().rev() {
        let input = &ws.acts[i];
        let output = &ws.acts[i + 1];
        let in_dim = layer.in_dim();

        // delta currently holds dL/d(activation output); fold in the
        // activation derivative to get dL/dz.
        for (d, &a) in ws.delta.iter_mut().zip(output.iter()) {
            *d *= layer.activation().grad_from_output(a);
        }

        let gw = &mut grads.weights[i];
        let gb = &mut grads.biases[i];
        ws.delta_prev.clear();
        ws.delta_prev.resize(in_dim, S::zero());
        for (o, &dz) in ws.delta.iter().enumerate() {
            gb[o] += dz;
            let row = o * in_dim;
            let wrow = &layer.weights()[row..row + in_dim];
            for j in 0..in_dim {
                gw[row + j] += dz * input[j];
                ws.delta_prev[j] += wrow[j] * dz;
            }
        }
        std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
    }
    Ok(loss)
}

fn validate_training_inputs<S: Scalar>(
    net: &LayeredNet<S>,
    data: &LabeledDataset<S>,
    cfg: &TrainConfig,
    trainable: &[bool],
) -> Result<()> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    if trainable.len() != net.num_layers() {
        return Err(Error::InvalidInput(format!(
            "trainable mask has {} entries for {} layers",
            trainable.len(),
            net.num_layers()
        )));
    }
    if data.feature_dim() != net.input_dim() {
        return Err(Error::InvalidInput(format!(
            "dataset dimension {} does not match network input {}",
            data.feature_dim(),
            net.input_dim()
        )));
    }
    if data.iter().any(|r| r.label >= net.class_count()) {
        return Err(Error::InvalidInput(
            "dataset labels exceed the network's class count".into(),
        ));
    }
    Ok(())
}

/// Trains a copy of `net` on `data`. Layers with a `false` entry in
/// `trainable` are left bit-identical to the input. Zero epochs (or a zero
/// learning rate) return the input parameters unchanged.
pub fn train<S: Scalar>(
    net: &LayeredNet<S>,
    data: &LabeledDataset<S>,
    cfg: &TrainConfig,
    trainable: &[bool],
) -> Result<LayeredNet<S>> {
    train_observed(net, data, cfg, trainable, |_, _| Ok(()))
}

/// Trains like [`train`] while scoring the net on `selection` after every
/// epoch, and returns the epoch snapshot with the highest selection
/// accuracy (earliest epoch on ties).
pub fn train_selecting_best<S: Scalar>(
    net: &LayeredNet<S>,
    data: &LabeledDataset<S>,
    selection: &LabeledDataset<S>,
    cfg: &TrainConfig,
    trainable: &[bool],
) -> Result<LayeredNet<S>> {
    if selection.is_empty() {
        return Err(Error::InvalidInput("selection dataset is empty".into()));
    }
    let mut best: Option<(f64, LayeredNet<S>)> = None;
    let trained = train_observed(net, data, cfg, trainable, |_, snapshot| {
        let acc = crate::nn::classification_accuracy(snapshot, selection)?;
        match &best {
            Some((best_acc, _)) if acc <= *best_acc => {}
            _ => best = Some((acc, snapshot.clone())),
        }
        Ok(())
    })?;
    Ok(best.map(|(_, n)| n).unwrap_or(trained))
}

fn train_observed<S: Scalar>(
    net: &LayeredNet<S>,
    data: &LabeledDataset<S>,
    cfg: &TrainConfig,
    trainable: &[bool],
    mut observer: impl FnMut(usize, &LayeredNet<S>) -> Result<()>,
) -> Result<LayeredNet<S>> {
    validate_training_inputs(net, data, cfg, trainable)?;

    let mut net = net.clone();
    if cfg.epochs == 0 {
        return Ok(net);
    }

    let batch_size = cfg.batch_size.min(data.len());
    let lr = cast::<S>(cfg.learning_rate);
    let momentum = cast::<S>(cfg.momentum);
    let weight_decay = cast::<S>(cfg.weight_decay);
    let use_momentum = cfg.momentum != 0.0;
    let use_decay = cfg.weight_decay != 0.0;

    let mut grads = GradBuffers::zeroed_like(&net);
    let mut velocity = GradBuffers::zeroed_like(&net);
    let mut ws = Workspace::for_net(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffle_rng = rng_from_seed(derive_seed(cfg.seed, tag::SHUFFLE));

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(batch_size) {
            grads.reset();
            for &idx in batch {
                let rec = &data.records()[idx];
                backprop_sample(&net, &rec.features, rec.label, &mut ws, &mut grads)?;
            }
            let scale = S::one() / cast::<S>(batch.len() as f64);

            for (li, layer) in net.layers_mut().iter_mut().enumerate() {
                if !trainable[li] {
                    continue;
                }
                step_params(
                    layer.weights_mut(),
                    &grads.weights[li],
                    &mut velocity.weights[li],
                    scale, lr, momentum, weight_decay, use_momentum, use_decay,
                );
                step_params(
                    layer.biases_mut(),
                    &grads.biases[li],
                    &mut velocity.biases[li],
                    scale, lr, momentum, S::zero(), use_momentum, false,
                );
            }
        }
        if !net.is_finite() {
            return Err(Error::NonFinite(format!(
                "parameters diverged during epoch {}",
                epoch + 1
            )));
        }
        observer(epoch, &net)?;
    }
    Ok(net)
}

#[allow(clippy::too_many_arguments)]
fn step_params<S: Scalar>(
    params: &mut [S],
    grads: &[S],
    velocity: &mut [S],
    scale: S,
    lr: S,
    momentum: S,
    weight_decay: S,
    use_momentum: bool,
    use_decay: bool,
) {
    for ((p, &g), v) in params.iter_mut().zip(grads.iter()).zip(velocity.iter_mut()) {
        let mut grad = g * scale;
        if use_decay {
            grad += weight_decay * *p;
        }
        if use_momentum {
            *v = momentum * *v + grad;
            grad = *v;
        }
        *p -= lr * grad;
    }
}

/// Mean cross-entropy of the net over a dataset.
pub fn average_loss<S: Scalar>(net: &LayeredNet<S>, data: &LabeledDataset<S>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty dataset".into()));
    }
    let mut total = 0.0;
    for rec in data.iter() {
        let v = net.forward(&rec.features)?;
        total += cross_entropy(&v, rec.label)?.to_f64().unwrap_or(f64::NAN);
    }
    Ok(total / data.len() as f64)
}

/// Convenience mask helpers.
pub fn all_trainable(num_layers: usize) -> Vec<bool> {
    vec![true; num_layers]
}

/// Freezes layers below `split_index`, leaving the deep stack trainable.
pub fn head_only_mask(num_layers: usize, split_index: usize) -> Vec<bool> {
    (0..num_layers).map(|i| i >= split_index).collect()
}

/// Gaussian-blob fixture used across the training tests: two classes at
/// means `(±2, ±2)` with sigma 0.3 are linearly separable.
#[cfg(test)]
pub(crate) fn blobs_fixture(points_per_class: usize, seed: u64) -> LabeledDataset<f64> {
    use crate::data::{synth_generate, SynthConfig};
    // class_mean_scale 2.83 puts typical means near the (±2, ±2) radius.
    let cfg = SynthConfig {
        class_count: 2,
        dim: 2,
        points_per_class,
        class_mean_scale: 2.83,
        noise_sigma: 0.3,
        seed,
    };
    synth_generate(&cfg).unwrap()
}
