//! Membership-inference adversaries.
//!
//! Two families share one interface: learning-based adversaries hold a
//! binary classifier per class (a small DNN or a linear SVM over the
//! prediction vector), entropy-based adversaries hold a per-class threshold
//! on the modified prediction entropy. [`infer`] applies either family to a
//! `(label, prediction vector)` query.

mod learned;
mod mpe;
mod pipeline;
mod svm;
mod threshold;

pub use learned::{
    attack_net_spec, train_learned_adversary, train_svm_adversary, LearnedKind, ATTACK_HIDDEN,
};
pub use mpe::modified_entropy;
pub use pipeline::{
    run_blackbox_target_attack, run_transmia, AttackKind, AttackSettings, BlackboxTargetPlan,
};
pub use svm::{svm_accuracy, train_svm, LinearSvm, SvmConfig};
pub use threshold::{
    collect_entropies, optimize_threshold, select_thresholds, select_thresholds_from_records,
    threshold_objective, ClassEntropies,
};

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::nn::{self, argmax, LayeredNet};
use crate::scalar::Scalar;
use crate::shadow::Membership;

/// The per-class model of a learned adversary.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassModel<S: Scalar> {
    /// Attack network: two-class softmax over the prediction vector.
    Net(LayeredNet<S>),
    /// Linear decision rule over the prediction vector.
    Svm(LinearSvm<S>),
    /// Degenerate class: always answers the majority tag.
    Constant(Membership),
}

/// A trained membership-inference adversary.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary<S: Scalar> {
    Learned { per_class: BTreeMap<usize, ClassModel<S>> },
    EntropyThreshold { per_class_tau: BTreeMap<usize, f64> },
}

impl<S: Scalar> Adversary<S> {
    /// Classes this adversary can answer for.
    pub fn covered_classes(&self) -> Vec<usize> {
        match self {
            Adversary::Learned { per_class } => per_class.keys().copied().collect(),
            Adversary::EntropyThreshold { per_class_tau } => {
                per_class_tau.keys().copied().collect()
            }
        }
    }
}

/// Applies the adversary to a query: the class label and the black-box
/// prediction vector for the candidate record. Deterministic; an
/// entropy-threshold adversary answers `In` exactly when the modified
/// prediction entropy is at or below the class threshold.
pub fn infer<S: Scalar>(adv: &Adversary<S>, label: usize, prediction: &[S]) -> Result<Membership> {
    match adv {
        Adversary::Learned { per_class } => {
            let model = per_class.get(&label).ok_or(Error::UncoveredClass(label))?;
            match model {
                ClassModel::Net(net) => {
                    let out = net.forward(prediction)?;
                    Ok(Membership::from_class_index(argmax(&out)))
                }
                ClassModel::Svm(svm) => svm.decide(prediction),
                ClassModel::Constant(tag) => Ok(*tag),
            }
        }
        Adversary::EntropyThreshold { per_class_tau } => {
            let tau = per_class_tau.get(&label).ok_or(Error::UncoveredClass(label))?;
            let me = modified_entropy(prediction, label)?
                .to_f64()
                .expect("entropy converts to f64");
            Ok(if me <= *tau { Membership::In } else { Membership::Out })
        }
    }
}

pub const ADVERSARY_MAGIC: &[u8; 4] = b"TMAD";
pub const ADVERSARY_FORMAT_VERSION: u32 = 1;

/// Serializes an adversary into a versioned binary blob.
///
/// Layout (little-endian): magic `TMAD`, version u32, kind u8
/// (0 = learned, 1 = entropy threshold), entry count u32, then per entry the
/// class id u32 followed by the payload. Learned payloads carry a model tag
/// u8 (0 = net blob with u64 length prefix, 1 = svm as dim u32 + weights +
/// bias + lambda as f64, 2 = constant membership u8); threshold payloads are
/// a single f64 tau.
pub fn save_adversary<S: Scalar>(adv: &Adversary<S>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ADVERSARY_MAGIC);
    out.extend_from_slice(&ADVERSARY_FORMAT_VERSION.to_le_bytes());
    match adv {
        Adversary::Learned { per_class } => {
            out.push(0);
            out.extend_from_slice(&(per_class.len() as u32).to_le_bytes());
            for (class, model) in per_class {
                out.extend_from_slice(&(*class as u32).to_le_bytes());
                match model {
                    ClassModel::Net(net) => {
                        out.push(0);
                        let blob = nn::save_params(net);
                        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
                        out.extend_from_slice(&blob);
                    }
                    ClassModel::Svm(svm) => {
                        out.push(1);
                        out.extend_from_slice(&(svm.weights.len() as u32).to_le_bytes());
                        for w in &svm.weights {
                            out.extend_from_slice(
                                &w.to_f64().expect("finite parameter").to_le_bytes(),
                            );
                        }
                        out.extend_from_slice(
                            &svm.bias.to_f64().expect("finite parameter").to_le_bytes(),
                        );
                        out.extend_from_slice(&svm.lambda.to_le_bytes());
                    }
                    ClassModel::Constant(tag) => {
                        out.push(2);
                        out.push(tag.class_index() as u8);
                    }
                }
            }
        }
        Adversary::EntropyThreshold { per_class_tau } => {
            out.push(1);
            out.extend_from_slice(&(per_class_tau.len() as u32).to_le_bytes());
            for (class, tau) in per_class_tau {
                out.extend_from_slice(&(*class as u32).to_le_bytes());
                out.extend_from_slice(&tau.to_le_bytes());
            }
        }
    }
    out
}

/// Reads back an adversary blob written by [`save_adversary`].
pub fn load_adversary<S: Scalar>(bytes: &[u8]) -> Result<Adversary<S>> {
    struct R<'a> {
        b: &'a [u8],
        pos: usize,
    }
    impl<'a> R<'a> {
        fn take(&mut self, n: usize) -> Result<&'a [u8]> {
            if self.pos + n > self.b.len() {
                return Err(Error::Parse(format!("adversary blob truncated at byte {}", self.pos)));
            }
            let s = &self.b[self.pos..self.pos + n];
            self.pos += n;
            Ok(s)
        }
        fn u8(&mut self) -> Result<u8> {
            Ok(self.take(1)?[0])
        }
        fn u32(&mut self) -> Result<u32> {
            Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
        }
        fn u64(&mut self) -> Result<u64> {
            Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
        }
        fn f64(&mut self) -> Result<f64> {
            Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
        }
    }

    let mut r = R { b: bytes, pos: 0 };
    if r.take(4)? != ADVERSARY_MAGIC {
        return Err(Error::Parse("bad magic: not an adversary blob".into()));
    }
    let version = r.u32()?;
    if version != ADVERSARY_FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: ADVERSARY_FORMAT_VERSION });
    }
    let kind = r.u8()?;
    let count = r.u32()? as usize;
    let adv = match kind {
        0 => {
            let mut per_class = BTreeMap::new();
            for _ in 0..count {
                let class = r.u32()? as usize;
                let model = match r.u8()? {
                    0 => {
                        let len = r.u64()? as usize;
                        ClassModel::Net(nn::load_params(r.take(len)?)?)
                    }
                    1 => {
                        let dim = r.u32()? as usize;
                        let mut weights = Vec::with_capacity(dim);
                        for _ in 0..dim {
                            weights
                                .push(S::from_f64(r.f64()?).expect("f64 converts to scalar"));
                        }
                        let bias = S::from_f64(r.f64()?).expect("f64 converts to scalar");
                        let lambda = r.f64()?;
                        ClassModel::Svm(LinearSvm { weights, bias, lambda })
                    }
                    2 => ClassModel::Constant(Membership::from_class_index(r.u8()? as usize)),
                    other => {
                        return Err(Error::Parse(format!("unknown class-model tag {other}")))
                    }
                };
                per_class.insert(class, model);
            }
            Adversary::Learned { per_class }
        }
        1 => {
            let mut per_class_tau = BTreeMap::new();
            for _ in 0..count {
                let class = r.u32()? as usize;
                per_class_tau.insert(class, r.f64()?);
            }
            Adversary::EntropyThreshold { per_class_tau }
        }
        other => return Err(Error::Parse(format!("unknown adversary kind {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Parse(format!(
            "{} trailing bytes after the adversary blob",
            bytes.len() - r.pos
        )));
    }
    Ok(adv)
}

/// Writes an entropy-threshold adversary's table as `class,tau`.
pub fn write_taus_csv<S: Scalar, W: Write>(adv: &Adversary<S>, mut out: W) -> Result<()> {
    match adv {
        Adversary::EntropyThreshold { per_class_tau } => {
            writeln!(out, "class,tau")?;
            for (class, tau) in per_class_tau {
                writeln!(out, "{class},{tau}")?;
            }
            Ok(())
        }
        Adversary::Learned { .. } => Err(Error::InvalidInput(
            "tau export applies to entropy-threshold adversaries only".into(),
        )),
    }
}
