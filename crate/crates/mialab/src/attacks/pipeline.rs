//! End-to-end attack pipelines.

use rayon::prelude::*;

use crate::attacks::{
    select_thresholds_from_records, train_learned_adversary, train_svm_adversary, Adversary,
    LearnedKind, SvmConfig,
};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{train, BlackBox, LayeredNet, NetSpec, TrainConfig};
use crate::rng::{derive_indexed_seed, derive_seed, tag};
use crate::scalar::Scalar;
use crate::shadow::{
    build_attack_training_set, sample_shadow_datasets, train_shadow_ensemble, AttackRecord,
    Membership, ShadowEnsemble, ShadowPlan,
};
use crate::transfer::{transfer_train, TransferMode, TransferPlan};

/// Which adversary the pipeline produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Dnn,
    Svm,
    Mpe,
}

impl AttackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Dnn => "dnn",
            AttackKind::Svm => "svm",
            AttackKind::Mpe => "mpe",
        }
    }
}

/// Hyperparameters for the adversary-training stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackSettings {
    /// Epochs, batch size, rates, and per-class seed stream for the DNN.
    pub train: TrainConfig,
    /// Regularization and epochs for the SVM.
    pub svm: SvmConfig,
}

impl AttackSettings {
    pub fn from_train_cfg(train: TrainConfig) -> Self {
        Self { svm: SvmConfig { epochs: train.epochs.max(1), ..SvmConfig::default() }, train }
    }
}

/// Builds an adversary against a black-box source model.
///
/// The pipeline samples per-shadow datasets from the pools, trains the
/// shadow ensemble under the plan's regime (transfer regimes seed their
/// shallow layers from the plan's leaked stack), assembles the
/// membership-labeled attack training set, and trains the requested
/// adversary: a per-class DNN or SVM, or per-class entropy thresholds.
///
/// The source model is reachable only through the [`BlackBox`] handle — this
/// operation can observe prediction vectors and nothing else. It spends one
/// query to confirm that the source's output width matches the shadow
/// architecture. The pools must be disjoint from the source's own train and
/// test data; that is the caller's obligation, the pools' ids are opaque
/// here.
pub fn run_transmia<S: Scalar>(
    source: &dyn BlackBox<S>,
    pool_train: &LabeledDataset<S>,
    pool_test: &LabeledDataset<S>,
    plan: &ShadowPlan<S>,
    kind: AttackKind,
    settings: &AttackSettings,
) -> Result<(Adversary<S>, ShadowEnsemble<S>)> {
    plan.validate()?;
    let probe = pool_train
        .iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("shadow train pool is empty".into()))?;
    let source_width = source.query(&probe.features)?.len();
    if source_width != plan.arch.class_count() {
        return Err(Error::InvalidPlan(format!(
            "source model answers over {} classes but the shadow architecture produces {}",
            source_width,
            plan.arch.class_count()
        )));
    }

    let (train_sets, test_sets) =
        sample_shadow_datasets(pool_train, pool_test, plan, plan.train_cfg.seed)?;
    let ensemble = train_shadow_ensemble(plan, train_sets, test_sets)?;
    let records = build_attack_training_set(&ensemble)?;

    let adversary = match kind {
        AttackKind::Dnn => train_learned_adversary(&records, LearnedKind::Dnn, &settings.train)?,
        AttackKind::Svm => train_svm_adversary(&records, &settings.svm)?,
        AttackKind::Mpe => Adversary::EntropyThreshold {
            per_class_tau: select_thresholds_from_records(&records)?,
        },
    };
    Ok((adversary, ensemble))
}

/// Plan for the attack that only sees the *target* model.
#[derive(Debug, Clone)]
pub struct BlackboxTargetPlan {
    /// Number of shadow source / shadow target model pairs.
    pub num_shadows: usize,
    /// Records sampled per shadow source model's training set.
    pub shadow_size: usize,
    /// Architecture of the shadow source models; the split marks the stack
    /// carried over to the shadow target models.
    pub source_arch: NetSpec,
    /// Training settings for the shadow source models.
    pub shadow_train_cfg: TrainConfig,
    /// The victim's transfer mode; the attacker mirrors it.
    pub transfer_mode: TransferMode,
    /// Head dimensions of the shadow target models, last entry = target
    /// class count.
    pub target_head_dims: Vec<usize>,
    /// Training settings for the shadow target models.
    pub target_train_cfg: TrainConfig,
    /// Training settings for the per-class attack DNNs.
    pub attack_cfg: TrainConfig,
}

impl BlackboxTargetPlan {
    pub fn validate(&self) -> Result<()> {
        self.shadow_train_cfg.validate()?;
        self.target_train_cfg.validate()?;
        self.attack_cfg.validate()?;
        self.source_arch
            .validate()
            .map_err(|e| Error::InvalidPlan(e.to_string()))?;
        if self.num_shadows == 0 || self.shadow_size == 0 {
            return Err(Error::InvalidPlan("num_shadows and shadow_size must be positive".into()));
        }
        if self.source_arch.split_index == 0
            || self.source_arch.split_index >= self.source_arch.num_layers()
        {
            return Err(Error::InvalidPlan(
                "source architecture split must leave both stacks non-empty".into(),
            ));
        }
        if self.target_head_dims.is_empty() || self.target_head_dims.contains(&0) {
            return Err(Error::InvalidPlan("target head dims must be positive".into()));
        }
        Ok(())
    }
}

/// Mounts the membership-inference attack against a black-box *target*
/// model (the network built from the source by transfer learning).
///
/// The attacker holds the shadow pools and the target training data, and
/// knows the victim's transfer mode. For each shadow index it trains a
/// shadow source model on a sampled shadow training set, transfers that
/// model's shallow stack into a shadow target model trained on the target
/// training data, then labels the full shadow pools with each shadow target
/// model's predictions (train pool `In`, test pool `Out`). A per-class DNN
/// adversary over the target model's prediction vectors is trained on those
/// records. The target model itself is reachable only through the
/// [`BlackBox`] handle and is queried once, to confirm its output width.
pub fn run_blackbox_target_attack<S: Scalar>(
    target: &dyn BlackBox<S>,
    target_train: &LabeledDataset<S>,
    pool_train: &LabeledDataset<S>,
    pool_test: &LabeledDataset<S>,
    plan: &BlackboxTargetPlan,
) -> Result<Adversary<S>> {
    plan.validate()?;
    if plan.shadow_size > pool_train.len() {
        return Err(Error::InvalidPlan(format!(
            "shadow_size {} exceeds the shadow train pool ({})",
            plan.shadow_size,
            pool_train.len()
        )));
    }
    let probe = pool_train
        .iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("shadow train pool is empty".into()))?;
    let target_width = target.query(&probe.features)?.len();
    let head_width = *plan.target_head_dims.last().expect("validated");
    if target_width != head_width {
        return Err(Error::InvalidPlan(format!(
            "target model answers over {target_width} classes but the shadow heads produce {head_width}"
        )));
    }

    let sample_base = derive_seed(plan.shadow_train_cfg.seed, tag::SAMPLE);
    let shadow_targets: Vec<LayeredNet<S>> = (0..plan.num_shadows)
        .into_par_iter()
        .map(|i| -> Result<LayeredNet<S>> {
            // Shadow source model on its own sampled training set.
            let mut rng = crate::rng::rng_from_seed(derive_indexed_seed(sample_base, 0, i as u64));
            let idx = rand::seq::index::sample(&mut rng, pool_train.len(), plan.shadow_size)
                .into_vec();
            let shadow_train = pool_train.subset(&idx)?;
            let model_seed =
                derive_indexed_seed(plan.shadow_train_cfg.seed, tag::SHADOW, i as u64);
            let fresh = LayeredNet::init(&plan.source_arch, derive_seed(model_seed, tag::INIT))?;
            let shadow_source = train::train(
                &fresh,
                &shadow_train,
                &plan.shadow_train_cfg.with_seed(model_seed),
                &train::all_trainable(fresh.num_layers()),
            )?;

            // Transfer its shallow stack into a shadow target model.
            let (g, _) = shadow_source.split()?;
            let target_seed =
                derive_indexed_seed(plan.target_train_cfg.seed, tag::TARGET, i as u64);
            transfer_train(
                &TransferPlan {
                    source_shallow: g,
                    target_head_dims: plan.target_head_dims.clone(),
                    mode: plan.transfer_mode,
                    train_cfg: plan.target_train_cfg.with_seed(target_seed),
                },
                target_train,
            )
        })
        .collect::<Result<_>>()?;

    // Label the full pools through every shadow target model.
    let mut records: Vec<AttackRecord<S>> = Vec::new();
    for model in &shadow_targets {
        for (pool, membership) in [(pool_train, Membership::In), (pool_test, Membership::Out)] {
            for rec in pool.iter() {
                records.push(AttackRecord {
                    record_id: rec.id,
                    label: rec.label,
                    prediction: model.forward(&rec.features)?,
                    membership,
                });
            }
        }
    }
    train_learned_adversary(&records, LearnedKind::Dnn, &plan.attack_cfg)
}
