//! Learning-based adversaries: one binary classifier per class label,
//! trained on membership-tagged prediction vectors.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::attacks::svm::{train_svm, SvmConfig};
use crate::attacks::{Adversary, ClassModel};
use crate::data::{LabeledDataset, Record};
use crate::error::{Error, Result};
use crate::nn::{train, LayeredNet, NetSpec, TrainConfig};
use crate::rng::{derive_indexed_seed, derive_seed, tag};
use crate::scalar::Scalar;
use crate::shadow::{AttackRecord, Membership};

/// Hidden widths of the attack network.
pub const ATTACK_HIDDEN: [usize; 3] = [50, 30, 5];

/// Which classifier family the learned adversary trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnedKind {
    Dnn,
    Svm,
}

/// Architecture of the attack network: prediction-vector input, hidden
/// layers 50/30/5, two-class softmax output.
pub fn attack_net_spec(input_dim: usize) -> NetSpec {
    NetSpec::dense(input_dim, &ATTACK_HIDDEN, 2)
}

enum ClassTrainer<'a> {
    Dnn(&'a TrainConfig),
    Svm(&'a SvmConfig),
}

/// Trains one binary classifier per class label.
///
/// The input of every per-class model is the prediction vector alone; class
/// `y`'s model trains only on records labeled `y`. A class whose records all
/// carry one membership tag cannot support a discriminative model: it gets a
/// constant majority-tag model and a logged warning. For the DNN `cfg`
/// drives epochs, batch size, and rates; for the SVM only `cfg.epochs`
/// applies, with the default regularization (see [`train_svm_adversary`] for
/// full control).
pub fn train_learned_adversary<S: Scalar>(
    records: &[AttackRecord<S>],
    kind: LearnedKind,
    cfg: &TrainConfig,
) -> Result<Adversary<S>> {
    cfg.validate()?;
    match kind {
        LearnedKind::Dnn => train_per_class(records, ClassTrainer::Dnn(cfg)),
        LearnedKind::Svm => {
            let svm_cfg = SvmConfig { epochs: cfg.epochs, ..SvmConfig::default() };
            train_per_class(records, ClassTrainer::Svm(&svm_cfg))
        }
    }
}

/// Per-class SVM adversary with explicit hyperparameters.
pub fn train_svm_adversary<S: Scalar>(
    records: &[AttackRecord<S>],
    cfg: &SvmConfig,
) -> Result<Adversary<S>> {
    cfg.validate()?;
    train_per_class(records, ClassTrainer::Svm(cfg))
}

fn train_per_class<S: Scalar>(
    records: &[AttackRecord<S>],
    trainer: ClassTrainer<'_>,
) -> Result<Adversary<S>> {
    let class_count = records
        .first()
        .map(|r| r.prediction.len())
        .ok_or_else(|| Error::InvalidInput("no attack records".into()))?;

    let mut by_class: BTreeMap<usize, Vec<&AttackRecord<S>>> = BTreeMap::new();
    for rec in records {
        if rec.prediction.len() != class_count {
            return Err(Error::InvalidInput("attack records have mixed widths".into()));
        }
        by_class.entry(rec.label).or_default().push(rec);
    }

    let groups: Vec<(usize, Vec<&AttackRecord<S>>)> = by_class.into_iter().collect();
    let models: Vec<(usize, ClassModel<S>)> = groups
        .par_iter()
        .map(|(class, rows)| {
            train_class_model(*class, rows, class_count, &trainer).map(|m| (*class, m))
        })
        .collect::<Result<_>>()?;

    Ok(Adversary::Learned { per_class: models.into_iter().collect() })
}

fn train_class_model<S: Scalar>(
    class: usize,
    rows: &[&AttackRecord<S>],
    class_count: usize,
    trainer: &ClassTrainer<'_>,
) -> Result<ClassModel<S>> {
    let ins = rows.iter().filter(|r| r.membership == Membership::In).count();
    let outs = rows.len() - ins;
    if ins == 0 || outs == 0 {
        let majority = if ins >= outs { Membership::In } else { Membership::Out };
        log::warn!(
            "class {class}: all {} records tagged {}; using a constant model",
            rows.len(),
            majority.as_str()
        );
        return Ok(ClassModel::Constant(majority));
    }

    match trainer {
        ClassTrainer::Dnn(cfg) => {
            let class_seed = derive_indexed_seed(cfg.seed, tag::ATTACK_CLASS, class as u64);
            // Fresh ids: the same pool record may appear under several
            // shadows, so attack rows are not id-unique.
            let data = LabeledDataset::new(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| Record {
                        id: i as u64,
                        features: r.prediction.clone(),
                        label: r.membership.class_index(),
                    })
                    .collect(),
                2,
            )?;
            let spec = attack_net_spec(class_count);
            let net = LayeredNet::init(&spec, derive_seed(class_seed, tag::INIT))?;
            let trained = train::train(
                &net,
                &data,
                &cfg.with_seed(class_seed),
                &train::all_trainable(net.num_layers()),
            )?;
            Ok(ClassModel::Net(trained))
        }
        ClassTrainer::Svm(svm_cfg) => {
            let samples: Vec<(&[S], Membership)> = rows
                .iter()
                .map(|r| (r.prediction.as_slice(), r.membership))
                .collect();
            Ok(ClassModel::Svm(train_svm(&samples, svm_cfg)?))
        }
    }
}
