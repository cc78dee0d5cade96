//! Per-class entropy thresholds.
//!
//! For each class the selected threshold maximizes the number of shadow
//! train records at or below it plus the number of shadow test records above
//! it. The objective is piecewise constant and can only change at observed
//! entropy values, so the candidate set is the distinct observed values plus
//! a zero cut standing in for "below every positive value" (entropies are
//! never negative). Ties prefer the smallest observed maximizer; the zero
//! cut wins only when strictly better.

use std::collections::BTreeMap;

use crate::attacks::mpe::modified_entropy;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shadow::{build_attack_training_set, AttackRecord, Membership, ShadowEnsemble};

/// Per-class entropy observations harvested from shadow records.
#[derive(Debug, Clone, Default)]
pub struct ClassEntropies {
    /// Entropies of records the owning shadow model trained on.
    pub train: Vec<f64>,
    /// Entropies of records the owning shadow model never saw.
    pub test: Vec<f64>,
}

/// The attack objective for a threshold `tau` on one class.
pub fn threshold_objective(entropies: &ClassEntropies, tau: f64) -> usize {
    let hits_train = entropies.train.iter().filter(|&&me| me <= tau).count();
    let hits_test = entropies.test.iter().filter(|&&me| me > tau).count();
    hits_train + hits_test
}

/// Maximizes the objective over the candidate cuts. Returns `(tau, value)`.
pub fn optimize_threshold(entropies: &ClassEntropies) -> (f64, usize) {
    let mut observed: Vec<f64> = entropies
        .train
        .iter()
        .chain(entropies.test.iter())
        .copied()
        .collect();
    observed.sort_by(|a, b| a.partial_cmp(b).expect("entropies are finite"));
    observed.dedup();

    // Sorted copies let each candidate be scored with two binary searches.
    let mut train_sorted = entropies.train.clone();
    train_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut test_sorted = entropies.test.clone();
    test_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count_le = |sorted: &[f64], tau: f64| sorted.partition_point(|&me| me <= tau);

    let mut best_tau = f64::NAN;
    let mut best_value = 0usize;
    for &tau in &observed {
        let value = count_le(&train_sorted, tau) + (test_sorted.len() - count_le(&test_sorted, tau));
        if value > best_value || best_tau.is_nan() {
            best_tau = tau;
            best_value = value;
        }
    }

    // The all-out cut: a zero threshold admits only zero-entropy records, so
    // when every observed value is positive it realizes "below everything".
    if observed.first().is_none_or(|&min| min > 0.0) {
        let value = test_sorted.len();
        if value > best_value {
            best_tau = 0.0;
            best_value = value;
        }
    }
    (best_tau, best_value)
}

/// Groups attack records into per-class entropy observations. Classes are
/// `0..class_count` where `class_count` is the prediction-vector width.
pub fn collect_entropies<S: Scalar>(
    records: &[AttackRecord<S>],
) -> Result<BTreeMap<usize, ClassEntropies>> {
    let class_count = records
        .first()
        .map(|r| r.prediction.len())
        .ok_or_else(|| Error::InvalidInput("no attack records".into()))?;
    let mut by_class: BTreeMap<usize, ClassEntropies> = BTreeMap::new();
    for rec in records {
        let me = modified_entropy(&rec.prediction, rec.label)?
            .to_f64()
            .expect("entropy converts to f64");
        let entry = by_class.entry(rec.label).or_default();
        match rec.membership {
            Membership::In => entry.train.push(me),
            Membership::Out => entry.test.push(me),
        }
    }
    for class in 0..class_count {
        if !by_class.contains_key(&class) {
            return Err(Error::ThresholdUndefined(class));
        }
    }
    Ok(by_class)
}

/// Selects the per-class thresholds from pre-built attack records.
pub fn select_thresholds_from_records<S: Scalar>(
    records: &[AttackRecord<S>],
) -> Result<BTreeMap<usize, f64>> {
    Ok(collect_entropies(records)?
        .into_iter()
        .map(|(class, entropies)| (class, optimize_threshold(&entropies).0))
        .collect())
}

/// Selects the per-class thresholds for an ensemble: entropies are computed
/// by each shadow model over its own train/test records.
pub fn select_thresholds<S: Scalar>(
    ensemble: &ShadowEnsemble<S>,
) -> Result<BTreeMap<usize, f64>> {
    let records = build_attack_training_set(ensemble)?;
    select_thresholds_from_records(&records)
}
