//! Dense feedforward classifiers with a shallow/deep split.
//!
//! A [`LayeredNet`] is a stack of affine-plus-activation layers followed by a
//! softmax over the class logits. The `split_index` marks where the shallow
//! stack ends and the deep stack begins; composing the two halves reproduces
//! the full forward pass bit for bit, which is what the transfer machinery
//! relies on.

mod gradcheck;
mod params_io;
pub mod train;

pub use gradcheck::{gradient_check, loss_gradients, LayerGrads};
pub use params_io::{
    load_params, load_params_file, save_params, save_params_file, FORMAT_VERSION, MAGIC,
};
pub use train::{average_loss, TrainConfig};

use rand::distributions::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::{cast, Scalar, PROB_CLAMP};

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > S::zero() {
                    z
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a = apply(z)`.
    pub(crate) fn grad_from_output<S: Scalar>(self, a: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Relu => {
                if a > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - a * a,
        }
    }
}

/// One dense layer: `a = activation(W x + b)` with `W` stored row-major as
/// `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<S: Scalar> {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<S>,
    biases: Vec<S>,
    activation: Activation,
}

impl<S: Scalar> DenseLayer<S> {
    /// Builds a layer from explicit parameters.
    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<S>,
        biases: Vec<S>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidInput("layer dims must be positive".into()));
        }
        if weights.len() != in_dim * out_dim || biases.len() != out_dim {
            return Err(Error::InvalidInput(format!(
                "parameter shapes do not match dims {in_dim}x{out_dim}"
            )));
        }
        Ok(Self { in_dim, out_dim, weights, biases, activation })
    }

    /// Glorot-style uniform init in `[-sqrt(6/(in+out)), +sqrt(6/(in+out))]`,
    /// biases zero.
    pub fn glorot<R: rand::Rng>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidInput("layer dims must be positive".into()));
        }
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weights = (0..in_dim * out_dim)
            .map(|_| cast::<S>(dist.sample(rng)))
            .collect();
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![S::zero(); out_dim],
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Row-major `(out_dim, in_dim)` weights.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn biases(&self) -> &[S] {
        &self.biases
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [S] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [S] {
        &mut self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.biases.iter().all(|b| b.is_finite())
    }

    /// `activation(W x + b)`.
    pub fn apply(&self, input: &[S], output: &mut Vec<S>) {
        debug_assert_eq!(input.len(), self.in_dim);
        output.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.biases[o];
            for (w, x) in row.iter().zip(input.iter()) {
                z += *w * *x;
            }
            output.push(self.activation.apply(z));
        }
    }
}

/// An ordered run of dense layers without the softmax head; the unit the
/// transfer machinery moves around.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack<S: Scalar>(Vec<DenseLayer<S>>);

impl<S: Scalar> LayerStack<S> {
    pub fn new(layers: Vec<DenseLayer<S>>) -> Result<Self> {
        check_chain(&layers)?;
        Ok(Self(layers))
    }

    pub fn layers(&self) -> &[DenseLayer<S>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn in_dim(&self) -> usize {
        self.0.first().map(|l| l.in_dim()).unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        self.0.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    /// Chains the layers over `x` (no softmax).
    pub fn apply(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.in_dim() {
            return Err(Error::InvalidInput(format!(
                "input dimension {} does not match stack input {}",
                x.len(),
                self.in_dim()
            )));
        }
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.0 {
            layer.apply(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    pub fn into_layers(self) -> Vec<DenseLayer<S>> {
        self.0
    }

    /// A stack serializes as a net whose split sits at the very end.
    pub fn into_net(self) -> LayeredNet<S> {
        let split = self.0.len();
        LayeredNet { layers: self.0, split_index: split }
    }
}

fn check_chain<S: Scalar>(layers: &[DenseLayer<S>]) -> Result<()> {
    for pair in layers.windows(2) {
        if pair[0].out_dim() != pair[1].in_dim() {
            return Err(Error::InvalidInput(format!(
                "layer dimensions do not chain: {} out vs {} in",
                pair[0].out_dim(),
                pair[1].in_dim()
            )));
        }
    }
    Ok(())
}

/// Architecture description used to initialize fresh networks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSpec {
    pub input_dim: usize,
    /// Output dimension of each layer; the last entry is the class count.
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub split_index: usize,
}

impl NetSpec {
    /// Relu hidden layers, identity output layer, split just before the
    /// output layer.
    pub fn dense(input_dim: usize, hidden: &[usize], classes: usize) -> Self {
        let mut layer_dims: Vec<usize> = hidden.to_vec();
        layer_dims.push(classes);
        let mut activations = vec![Activation::Relu; hidden.len()];
        activations.push(Activation::Identity);
        let split_index = layer_dims.len().saturating_sub(1);
        Self { input_dim, layer_dims, activations, split_index }
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn class_count(&self) -> usize {
        *self.layer_dims.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.layer_dims.is_empty() {
            return Err(Error::InvalidInput("spec needs an input dim and at least one layer".into()));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::InvalidInput("layer dims must be positive".into()));
        }
        if self.activations.len() != self.layer_dims.len() {
            return Err(Error::InvalidInput(
                "one activation per layer is required".into(),
            ));
        }
        if self.split_index > self.layer_dims.len() {
            return Err(Error::InvalidInput(format!(
                "split index {} exceeds layer count {}",
                self.split_index,
                self.layer_dims.len()
            )));
        }
        Ok(())
    }
}

/// A feedforward classifier `f = h . g`: layers below `split_index` form the
/// shallow stack `g`, the rest form the deep stack `h`, and the output is a
/// softmax over the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNet<S: Scalar> {
    layers: Vec<DenseLayer<S>>,
    split_index: usize,
}

impl<S: Scalar> LayeredNet<S> {
    /// Fresh Glorot-initialized network from an architecture and a seed.
    pub fn init(spec: &NetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::with_capacity(spec.num_layers());
        let mut in_dim = spec.input_dim;
        for (&out_dim, &act) in spec.layer_dims.iter().zip(spec.activations.iter()) {
            layers.push(DenseLayer::glorot(in_dim, out_dim, act, &mut rng)?);
            in_dim = out_dim;
        }
        Ok(Self { layers, split_index: spec.split_index })
    }

    /// Builds a net from explicit layers.
    pub fn from_layers(layers: Vec<DenseLayer<S>>, split_index: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("a net needs at least one layer".into()));
        }
        if split_index > layers.len() {
            return Err(Error::InvalidInput(format!(
                "split index {} exceeds layer count {}",
                split_index,
                layers.len()
            )));
        }
        check_chain(&layers)?;
        Ok(Self { layers, split_index })
    }

    /// Concatenates a shallow and a deep stack; the split lands at the seam.
    pub fn from_stacks(shallow: LayerStack<S>, deep: LayerStack<S>) -> Result<Self> {
        let split_index = shallow.len();
        let mut layers = shallow.into_layers();
        layers.extend(deep.into_layers());
        Self::from_layers(layers, split_index)
    }

    pub fn layers(&self) -> &[DenseLayer<S>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer<S>] {
        &mut self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn class_count(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.is_finite())
    }

    /// Pre-softmax outputs of the full layer chain.
    pub(crate) fn raw_output(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "input dimension {} does not match network input {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.apply(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// The prediction vector `f(x)`: a probability distribution over classes.
    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        let mut logits = self.raw_output(x)?;
        softmax_in_place(&mut logits);
        Ok(logits)
    }

    /// The classification result: `argmax_y f(x)_y`, lowest index on ties.
    pub fn classify(&self, x: &[S]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Tears the net into its shallow and deep stacks. Rejected when the
    /// split sits at either boundary, which would leave one side empty.
    pub fn split(&self) -> Result<(LayerStack<S>, LayerStack<S>)> {
        if self.split_index == 0 || self.split_index == self.layers.len() {
            return Err(Error::InvalidSplit(format!(
                "split index {} leaves an empty stack (net has {} layers)",
                self.split_index,
                self.layers.len()
            )));
        }
        let shallow = self.layers[..self.split_index].to_vec();
        let deep = self.layers[self.split_index..].to_vec();
        Ok((LayerStack(shallow), LayerStack(deep)))
    }

    /// Clones the shallow stack (layers below the split).
    pub fn shallow_stack(&self) -> Result<LayerStack<S>> {
        Ok(self.split()?.0)
    }
}

/// Numerically-shifted softmax, in place.
pub(crate) fn softmax_in_place<S: Scalar>(logits: &mut [S]) {
    let max = logits
        .iter()
        .fold(S::neg_infinity(), |m, &z| if z > m { z } else { m });
    let mut sum = S::zero();
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy of a prediction vector against the true label:
/// `-ln(max(v_y, PROB_CLAMP))`. The clamp keeps the loss finite when the
/// correct class receives zero mass; stored prediction vectors are never
/// clamped.
pub fn cross_entropy<S: Scalar>(prediction: &[S], label: usize) -> Result<S> {
    if label >= prediction.len() {
        return Err(Error::InvalidInput(format!(
            "label {label} outside the {}-class prediction vector",
            prediction.len()
        )));
    }
    let clamped = prediction[label].max(cast(PROB_CLAMP));
    Ok(-clamped.ln())
}

/// Query-only access to a classifier. Callers see prediction vectors and
/// nothing else, which is how the attack pipelines keep their black-box
/// discipline: a `&dyn BlackBox` handle cannot leak parameters.
pub trait BlackBox<S: Scalar> {
    /// The prediction vector for `x`.
    fn query(&self, x: &[S]) -> Result<Vec<S>>;
}

impl<S: Scalar> BlackBox<S> for LayeredNet<S> {
    fn query(&self, x: &[S]) -> Result<Vec<S>> {
        self.forward(x)
    }
}

impl<S: Scalar, F> BlackBox<S> for F
where
    F: Fn(&[S]) -> Result<Vec<S>>,
{
    fn query(&self, x: &[S]) -> Result<Vec<S>> {
        self(x)
    }
}

/// Fraction of records the net classifies correctly.
pub fn classification_accuracy<S: Scalar>(
    net: &LayeredNet<S>,
    data: &crate::data::LabeledDataset<S>,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty dataset".into()));
    }
    let mut hits = 0usize;
    for rec in data.iter() {
        if net.classify(&rec.features)? == rec.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_net(dims: (usize, usize)) -> LayeredNet<f64> {
        let layer = DenseLayer::from_parts(
            dims.0,
            dims.1,
            vec![0.0; dims.0 * dims.1],
            vec![0.0; dims.1],
            Activation::Identity,
        )
        .unwrap();
        LayeredNet::from_layers(vec![layer], 0).unwrap()
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = zero_net((3, 4));
        let v = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        for p in &v {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_layer_softmax_hand_value() {
        // logits (0, ln 3) -> probabilities (1/4, 3/4)
        let layer = DenseLayer::from_parts(
            2,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap();
        let net = LayeredNet::from_layers(vec![layer], 0).unwrap();
        let v = net.forward(&[0.0, 3.0f64.ln()]).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-12);
        assert!((v[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn forward_output_is_a_distribution() {
        let spec = NetSpec::dense(5, &[7, 4], 3);
        let net: LayeredNet<f64> = LayeredNet::init(&spec, 3).unwrap();
        let v = net.forward(&[0.3, -1.2, 0.0, 2.5, -0.7]).unwrap();
        let sum: f64 = v.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let net = zero_net((3, 2));
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cross_entropy_hand_values() {
        // one-hot at the label: zero loss
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        // uniform two-class: ln 2
        let ce = cross_entropy(&[0.5, 0.5], 0).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-12);
        // zero mass on the label: clamp keeps it finite
        let ce = cross_entropy(&[0.0, 1.0], 0).unwrap();
        assert!((ce - (-PROB_CLAMP.ln())).abs() < 1e-12);
        assert!(ce.is_finite());
    }

    #[test]
    fn cross_entropy_rejects_bad_label() {
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn split_and_recompose_is_the_identity_on_forward() {
        let spec = NetSpec {
            input_dim: 4,
            layer_dims: vec![6, 5, 3],
            activations: vec![Activation::Relu, Activation::Tanh, Activation::Identity],
            split_index: 2,
        };
        let net: LayeredNet<f64> = LayeredNet::init(&spec, 17).unwrap();
        let (g, h) = net.split().unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(h.len(), 1);

        let x = [0.1, -0.4, 0.9, 2.0];
        let direct = net.forward(&x).unwrap();
        let mut via_stacks = h.apply(&g.apply(&x).unwrap()).unwrap();
        softmax_in_place(&mut via_stacks);
        // bitwise identical, not merely close
        for (a, b) in direct.iter().zip(via_stacks.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let recomposed = LayeredNet::from_stacks(g, h).unwrap();
        let again = recomposed.forward(&x).unwrap();
        for (a, b) in direct.iter().zip(again.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn boundary_split_is_rejected() {
        let spec = NetSpec { split_index: 0, ..NetSpec::dense(3, &[4], 2) };
        let net: LayeredNet<f64> = LayeredNet::init(&spec, 0).unwrap();
        assert!(matches!(net.split(), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let spec = NetSpec::dense(4, &[8], 3);
        let a: LayeredNet<f64> = LayeredNet::init(&spec, 5).unwrap();
        let b: LayeredNet<f64> = LayeredNet::init(&spec, 5).unwrap();
        let c: LayeredNet<f64> = LayeredNet::init(&spec, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn argmax_ties_go_to_the_lowest_index() {
        assert_eq!(argmax(&[0.25f64, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1f64, 0.4, 0.4, 0.1]), 1);
    }
}
