//! Shadow-model machinery: per-shadow dataset sampling, ensemble training
//! under the baseline / freezing / fine-tuning regimes, and assembly of the
//! membership-labeled attack training set.

use std::io::Write;

use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{train, LayerStack, LayeredNet, NetSpec, TrainConfig};
use crate::rng::{derive_indexed_seed, derive_seed, rng_from_seed, tag};
use crate::scalar::Scalar;
use crate::transfer::fresh_head;

/// Membership tag attached to attack records and produced by adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    In,
    Out,
}

impl Membership {
    pub fn as_str(&self) -> &'static str {
        match self {
            Membership::In => "in",
            Membership::Out => "out",
        }
    }

    /// Binary class index used when a classifier learns the tag.
    pub fn class_index(&self) -> usize {
        match self {
            Membership::Out => 0,
            Membership::In => 1,
        }
    }

    pub fn from_class_index(index: usize) -> Self {
        if index == 1 {
            Membership::In
        } else {
            Membership::Out
        }
    }
}

/// How shadow models are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShadowRegime {
    /// Every layer freshly initialized; no transferred knowledge.
    Baseline,
    /// Shallow layers copied from the leaked stack and frozen.
    Freezing,
    /// Shallow layers copied from the leaked stack, then updated.
    FineTuning,
}

impl ShadowRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShadowRegime::Baseline => "baseline",
            ShadowRegime::Freezing => "freezing",
            ShadowRegime::FineTuning => "fine_tuning",
        }
    }
}

/// Plan for building one shadow ensemble.
#[derive(Debug, Clone)]
pub struct ShadowPlan<S: Scalar> {
    /// Number of shadow models.
    pub num_shadows: usize,
    /// Records drawn per shadow for both its train and its test set.
    pub shadow_size: usize,
    pub regime: ShadowRegime,
    /// The leaked shallow stack; present exactly when the regime transfers.
    pub source_shallow: Option<LayerStack<S>>,
    /// Full shadow architecture. The split index marks the seam: under the
    /// transfer regimes the layers below it are replaced by the leaked stack.
    pub arch: NetSpec,
    pub train_cfg: TrainConfig,
}

impl<S: Scalar> ShadowPlan<S> {
    pub fn validate(&self) -> Result<()> {
        self.train_cfg.validate()?;
        self.arch.validate().map_err(|e| Error::InvalidPlan(e.to_string()))?;
        if self.num_shadows == 0 {
            return Err(Error::InvalidPlan("num_shadows must be positive".into()));
        }
        if self.shadow_size == 0 {
            return Err(Error::InvalidPlan("shadow_size must be positive".into()));
        }
        match (&self.source_shallow, self.regime) {
            (None, ShadowRegime::Baseline) => Ok(()),
            (Some(_), ShadowRegime::Baseline) => Err(Error::InvalidPlan(
                "baseline regime must not carry a transferred stack".into(),
            )),
            (None, _) => Err(Error::InvalidPlan(
                "transfer regimes require the transferred stack".into(),
            )),
            (Some(g), _) => {
                if self.arch.split_index == 0 || self.arch.split_index >= self.arch.num_layers() {
                    return Err(Error::InvalidPlan(
                        "architecture split must leave both stacks non-empty".into(),
                    ));
                }
                if g.len() != self.arch.split_index {
                    return Err(Error::InvalidPlan(format!(
                        "transferred stack has {} layers but the seam sits at {}",
                        g.len(),
                        self.arch.split_index
                    )));
                }
                if g.in_dim() != self.arch.input_dim {
                    return Err(Error::InvalidPlan(format!(
                        "transferred stack input {} does not match architecture input {}",
                        g.in_dim(),
                        self.arch.input_dim
                    )));
                }
                let seam = self.arch.layer_dims[self.arch.split_index - 1];
                if g.out_dim() != seam {
                    return Err(Error::InvalidPlan(format!(
                        "transferred stack output {} does not match seam width {}",
                        g.out_dim(),
                        seam
                    )));
                }
                Ok(())
            }
        }
    }

    fn head_dims(&self) -> &[usize] {
        &self.arch.layer_dims[self.arch.split_index..]
    }
}

/// Trained shadow models and the datasets they saw (or did not see).
#[derive(Debug, Clone)]
pub struct ShadowEnsemble<S: Scalar> {
    pub models: Vec<LayeredNet<S>>,
    pub per_model_train: Vec<LabeledDataset<S>>,
    pub per_model_test: Vec<LabeledDataset<S>>,
}

impl<S: Scalar> ShadowEnsemble<S> {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Checks the structural invariants: aligned lengths and per-shadow
    /// train/test disjointness by record id.
    pub fn validate(&self) -> Result<()> {
        if self.models.len() != self.per_model_train.len()
            || self.models.len() != self.per_model_test.len()
        {
            return Err(Error::Integrity("ensemble vectors are misaligned".into()));
        }
        for (i, (tr, te)) in self
            .per_model_train
            .iter()
            .zip(self.per_model_test.iter())
            .enumerate()
        {
            if !tr.disjoint_from(te) {
                return Err(Error::Integrity(format!(
                    "shadow {i}: train and test sets share a record id"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the attack training set: a prediction made by the shadow model
/// that did (or did not) train on the record.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRecord<S: Scalar> {
    pub record_id: u64,
    pub label: usize,
    pub prediction: Vec<S>,
    pub membership: Membership,
}

/// The per-shadow training and test datasets, aligned by shadow index.
pub type SampledShadowData<S> = (Vec<LabeledDataset<S>>, Vec<LabeledDataset<S>>);

/// Draws the per-shadow train/test datasets from the two pools.
///
/// Within one shadow the draw is uniform without replacement; different
/// shadows sample independently, so their datasets may intersect. Per-shadow
/// train/test disjointness follows from the pools being disjoint.
pub fn sample_shadow_datasets<S: Scalar>(
    pool_train: &LabeledDataset<S>,
    pool_test: &LabeledDataset<S>,
    plan: &ShadowPlan<S>,
    seed: u64,
) -> Result<SampledShadowData<S>> {
    plan.validate()?;
    if plan.shadow_size > pool_train.len() || plan.shadow_size > pool_test.len() {
        return Err(Error::InvalidPlan(format!(
            "shadow_size {} exceeds a pool (train {}, test {})",
            plan.shadow_size,
            pool_train.len(),
            pool_test.len()
        )));
    }
    let base = derive_seed(seed, tag::SAMPLE);
    let mut train_sets = Vec::with_capacity(plan.num_shadows);
    let mut test_sets = Vec::with_capacity(plan.num_shadows);
    for i in 0..plan.num_shadows {
        let mut rng_train = rng_from_seed(derive_indexed_seed(base, 0, i as u64));
        let mut rng_test = rng_from_seed(derive_indexed_seed(base, 1, i as u64));
        let idx_train =
            rand::seq::index::sample(&mut rng_train, pool_train.len(), plan.shadow_size).into_vec();
        let idx_test =
            rand::seq::index::sample(&mut rng_test, pool_test.len(), plan.shadow_size).into_vec();
        train_sets.push(pool_train.subset(&idx_train)?);
        test_sets.push(pool_test.subset(&idx_test)?);
    }
    Ok((train_sets, test_sets))
}

/// Trains one shadow model under the plan's regime; `model_seed` drives both
/// the fresh initialization and the training shuffle.
fn train_one_shadow<S: Scalar>(
    plan: &ShadowPlan<S>,
    data: &LabeledDataset<S>,
    model_seed: u64,
) -> Result<LayeredNet<S>> {
    let cfg = plan.train_cfg.with_seed(model_seed);
    match plan.regime {
        ShadowRegime::Baseline => {
            let net = LayeredNet::init(&plan.arch, derive_seed(model_seed, tag::INIT))?;
            train::train(&net, data, &cfg, &train::all_trainable(net.num_layers()))
        }
        ShadowRegime::Freezing | ShadowRegime::FineTuning => {
            let g = plan.source_shallow.as_ref().expect("validated").clone();
            let head = fresh_head(g.out_dim(), plan.head_dims(), derive_seed(model_seed, tag::HEAD_INIT))?;
            let net = LayeredNet::from_stacks(g, head)?;
            let mask = match plan.regime {
                ShadowRegime::Freezing => train::head_only_mask(net.num_layers(), net.split_index()),
                _ => train::all_trainable(net.num_layers()),
            };
            train::train(&net, data, &cfg, &mask)
        }
    }
}

/// Trains the full ensemble over pre-sampled datasets. Models train
/// independently (in parallel) with per-model seeds derived from the plan
/// seed, and results are ordered by shadow index.
pub fn train_shadow_ensemble<S: Scalar>(
    plan: &ShadowPlan<S>,
    train_sets: Vec<LabeledDataset<S>>,
    test_sets: Vec<LabeledDataset<S>>,
) -> Result<ShadowEnsemble<S>> {
    plan.validate()?;
    if train_sets.len() != plan.num_shadows || test_sets.len() != plan.num_shadows {
        return Err(Error::InvalidPlan(format!(
            "expected {} sampled datasets, got {} train / {} test",
            plan.num_shadows,
            train_sets.len(),
            test_sets.len()
        )));
    }
    let models: Vec<LayeredNet<S>> = train_sets
        .par_iter()
        .enumerate()
        .map(|(i, data)| {
            let model_seed = derive_indexed_seed(plan.train_cfg.seed, tag::SHADOW, i as u64);
            train_one_shadow(plan, data, model_seed)
        })
        .collect::<Result<_>>()?;
    let ensemble = ShadowEnsemble { models, per_model_train: train_sets, per_model_test: test_sets };
    ensemble.validate()?;
    Ok(ensemble)
}

/// Samples and trains in one call.
pub fn build_shadow_ensemble<S: Scalar>(
    pool_train: &LabeledDataset<S>,
    pool_test: &LabeledDataset<S>,
    plan: &ShadowPlan<S>,
) -> Result<ShadowEnsemble<S>> {
    let (train_sets, test_sets) =
        sample_shadow_datasets(pool_train, pool_test, plan, plan.train_cfg.seed)?;
    train_shadow_ensemble(plan, train_sets, test_sets)
}

/// Labels every per-shadow record with its membership and the prediction of
/// the shadow model that owns it: train records are `In`, test records are
/// `Out`. Equal per-shadow train/test sizes make the result exactly
/// balanced.
pub fn build_attack_training_set<S: Scalar>(
    ensemble: &ShadowEnsemble<S>,
) -> Result<Vec<AttackRecord<S>>> {
    ensemble.validate()?;
    let mut records = Vec::new();
    for (i, model) in ensemble.models.iter().enumerate() {
        for (dataset, membership) in [
            (&ensemble.per_model_train[i], Membership::In),
            (&ensemble.per_model_test[i], Membership::Out),
        ] {
            for rec in dataset.iter() {
                records.push(AttackRecord {
                    record_id: rec.id,
                    label: rec.label,
                    prediction: model.forward(&rec.features)?,
                    membership,
                });
            }
        }
    }
    Ok(records)
}

/// Writes the attack training set as
/// `record_id,class,membership,p_0,...,p_{k-1}`.
pub fn write_attack_records_csv<S: Scalar, W: Write>(
    records: &[AttackRecord<S>],
    mut out: W,
) -> Result<()> {
    let classes = records.first().map(|r| r.prediction.len()).unwrap_or(0);
    write!(out, "record_id,class,membership")?;
    for c in 0..classes {
        write!(out, ",p_{c}")?;
    }
    writeln!(out)?;
    for rec in records {
        write!(out, "{},{},{}", rec.record_id, rec.label, rec.membership.as_str())?;
        for p in &rec.prediction {
            write!(out, ",{}", p.to_f64().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
