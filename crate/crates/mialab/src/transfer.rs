//! Network-based transfer learning: reuse a source net's shallow stack to
//! train a new classifier, either freezing the transferred layers or
//! fine-tuning the whole network.

use crate::error::{Error, Result};
use crate::nn::{
    train, Activation, DenseLayer, LayerStack, LayeredNet, TrainConfig,
};
use crate::rng::{derive_seed, rng_from_seed, tag};
use crate::scalar::Scalar;

/// How the transferred shallow layers are treated during target training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    /// Shallow layers stay bit-identical to the source stack; only the new
    /// deep stack trains.
    Freezing,
    /// Shallow layers start from the source stack and the whole network
    /// updates.
    FineTuning,
}

/// Everything needed to build and train a transferred network.
#[derive(Debug, Clone)]
pub struct TransferPlan<S: Scalar> {
    /// The transferred shallow stack `g`.
    pub source_shallow: LayerStack<S>,
    /// Output dimensions of the fresh deep stack, last entry = target class
    /// count. Hidden head layers use relu, the output layer is linear.
    pub target_head_dims: Vec<usize>,
    pub mode: TransferMode,
    pub train_cfg: TrainConfig,
}

impl<S: Scalar> TransferPlan<S> {
    pub fn validate(&self) -> Result<()> {
        self.train_cfg.validate()?;
        if self.source_shallow.is_empty() {
            return Err(Error::InvalidPlan("transferred stack is empty".into()));
        }
        if self.target_head_dims.is_empty() {
            return Err(Error::InvalidPlan("target head needs at least one layer".into()));
        }
        if self.target_head_dims.contains(&0) {
            return Err(Error::InvalidPlan("target head dims must be positive".into()));
        }
        Ok(())
    }

    /// Target class count this plan produces.
    pub fn target_classes(&self) -> usize {
        *self.target_head_dims.last().expect("validated non-empty")
    }
}

/// Builds a fresh head stack on top of `in_dim`: relu hidden layers, linear
/// output layer, Glorot-initialized from `seed`.
pub(crate) fn fresh_head<S: Scalar>(
    in_dim: usize,
    head_dims: &[usize],
    seed: u64,
) -> Result<LayerStack<S>> {
    let mut rng = rng_from_seed(seed);
    let mut layers = Vec::with_capacity(head_dims.len());
    let mut current_in = in_dim;
    for (i, &out) in head_dims.iter().enumerate() {
        let act = if i + 1 == head_dims.len() {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(DenseLayer::glorot(current_in, out, act, &mut rng)?);
        current_in = out;
    }
    LayerStack::new(layers)
}

/// Assembles the transferred network (shallow stack + fresh head) and trains
/// it on `target_data` according to the plan's mode.
///
/// The fresh head is initialized from a stream derived from
/// `plan.train_cfg.seed`, so a plan fully determines the result. Under
/// `Freezing` the returned shallow layers are bit-identical to
/// `plan.source_shallow`; under `FineTuning` they start there and move with
/// training (zero epochs therefore returns them bit-identical as well).
pub fn transfer_train<S: Scalar>(
    plan: &TransferPlan<S>,
    target_data: &crate::data::LabeledDataset<S>,
) -> Result<LayeredNet<S>> {
    plan.validate()?;
    if target_data.feature_dim() != plan.source_shallow.in_dim() {
        return Err(Error::InvalidPlan(format!(
            "target data dimension {} does not match the transferred stack input {}",
            target_data.feature_dim(),
            plan.source_shallow.in_dim()
        )));
    }
    if target_data.class_count() != plan.target_classes() {
        return Err(Error::InvalidPlan(format!(
            "target data has {} classes but the head produces {}",
            target_data.class_count(),
            plan.target_classes()
        )));
    }

    let head_seed = derive_seed(plan.train_cfg.seed, tag::HEAD_INIT);
    let head = fresh_head(
        plan.source_shallow.out_dim(),
        &plan.target_head_dims,
        head_seed,
    )?;
    let net = LayeredNet::from_stacks(plan.source_shallow.clone(), head)
        .map_err(|e| Error::InvalidPlan(e.to_string()))?;

    let mask = match plan.mode {
        TransferMode::Freezing => train::head_only_mask(net.num_layers(), net.split_index()),
        TransferMode::FineTuning => train::all_trainable(net.num_layers()),
    };
    train::train(&net, target_data, &plan.train_cfg, &mask)
}
