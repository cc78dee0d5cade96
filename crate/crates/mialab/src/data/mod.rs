//! Dataset representation and the four-way experiment split.

mod synth;
mod table;

pub use synth::{synth_generate, SynthConfig};
pub use table::{load_table, parse_table, save_table, write_table};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// A single labeled example. Record ids are opaque and unique within a
/// dataset; they survive subsetting so membership can be tracked by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<S: Scalar> {
    pub id: u64,
    pub features: Vec<S>,
    pub label: usize,
}

/// A feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<S: Scalar> {
    records: Vec<Record<S>>,
    class_count: usize,
    feature_dim: usize,
}

impl<S: Scalar> LabeledDataset<S> {
    /// Builds a dataset, checking dimension uniformity, label range, and
    /// record-id uniqueness.
    pub fn new(records: Vec<Record<S>>, class_count: usize) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::InvalidInput("class_count must be positive".into()));
        }
        let feature_dim = records.first().map(|r| r.features.len()).unwrap_or(0);
        let mut seen = std::collections::HashSet::with_capacity(records.len());
        for rec in &records {
            if rec.features.len() != feature_dim {
                return Err(Error::InvalidInput(format!(
                    "record {} has dimension {} but the dataset uses {}",
                    rec.id,
                    rec.features.len(),
                    feature_dim
                )));
            }
            if rec.label >= class_count {
                return Err(Error::InvalidInput(format!(
                    "record {} has label {} outside [0, {})",
                    rec.id, rec.label, class_count
                )));
            }
            if !seen.insert(rec.id) {
                return Err(Error::Integrity(format!("duplicate record id {}", rec.id)));
            }
        }
        Ok(Self {
            records,
            class_count,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn records(&self) -> &[Record<S>] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Record<S>> {
        self.records.iter()
    }

    /// A new dataset holding clones of the records at `indices`, in order.
    /// Ids are preserved, so `indices` must not repeat.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let records = indices
            .iter()
            .map(|&i| {
                self.records
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("index {i} out of bounds")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(records, self.class_count)
    }

    /// True when no record id appears in both datasets.
    pub fn disjoint_from(&self, other: &Self) -> bool {
        let ids: std::collections::HashSet<u64> = self.records.iter().map(|r| r.id).collect();
        other.records.iter().all(|r| !ids.contains(&r.id))
    }
}

/// The four pairwise-disjoint datasets an experiment works with.
#[derive(Debug, Clone)]
pub struct FourWaySplit<S: Scalar> {
    pub train: LabeledDataset<S>,
    pub test: LabeledDataset<S>,
    pub shadow_train: LabeledDataset<S>,
    pub shadow_test: LabeledDataset<S>,
}

/// Requested sizes for [`split_four_way`], in record counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
    pub shadow_train: usize,
    pub shadow_test: usize,
}

impl SplitSizes {
    fn as_array(&self) -> [usize; 4] {
        [self.train, self.test, self.shadow_train, self.shadow_test]
    }
}

/// Splits a dataset into pairwise-disjoint parts of the given sizes,
/// discarding leftovers. Stratified mode gives each part `size /
/// class_count` records of every class (sizes must divide accordingly);
/// unstratified mode carves the parts out of one global shuffle. A fixed
/// seed yields an identical partition.
pub fn partition<S: Scalar>(
    dataset: &LabeledDataset<S>,
    sizes: &[usize],
    seed: u64,
    stratified: bool,
) -> Result<Vec<LabeledDataset<S>>> {
    let classes = dataset.class_count();
    let total: usize = sizes.iter().sum();
    if total > dataset.len() {
        return Err(Error::InvalidSplit(format!(
            "requested {total} records but the dataset holds {}",
            dataset.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidSplit("all split sizes must be positive".into()));
    }

    let mut rng = rng_from_seed(seed);
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];

    if stratified {
        let per_class: Vec<usize> = sizes
            .iter()
            .map(|&s| {
                if s % classes != 0 {
                    Err(Error::InvalidSplit(format!(
                        "size {s} is not divisible by the class count {classes}"
                    )))
                } else {
                    Ok(s / classes)
                }
            })
            .collect::<Result<_>>()?;
        let need_per_class: usize = per_class.iter().sum();

        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for (i, rec) in dataset.iter().enumerate() {
            by_class[rec.label].push(i);
        }
        for (c, pool) in by_class.iter_mut().enumerate() {
            if pool.len() < need_per_class {
                return Err(Error::InvalidSplit(format!(
                    "class {c} holds {} records but the split needs {need_per_class}",
                    pool.len()
                )));
            }
            pool.shuffle(&mut rng);
            let mut offset = 0;
            for (part, &take) in parts.iter_mut().zip(per_class.iter()) {
                part.extend_from_slice(&pool[offset..offset + take]);
                offset += take;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);
        let mut offset = 0;
        for (part, &take) in parts.iter_mut().zip(sizes.iter()) {
            part.extend_from_slice(&order[offset..offset + take]);
            offset += take;
        }
    }

    parts.into_iter().map(|idx| dataset.subset(&idx)).collect()
}

/// Splits a dataset into the four pairwise-disjoint, class-stratified parts
/// an experiment works with. Each part receives `size / class_count`
/// records of every class; leftover records are discarded.
pub fn split_four_way<S: Scalar>(
    dataset: &LabeledDataset<S>,
    sizes: SplitSizes,
    seed: u64,
) -> Result<FourWaySplit<S>> {
    split_four_way_with(dataset, sizes, seed, true)
}

/// As [`split_four_way`], with stratification optional.
pub fn split_four_way_with<S: Scalar>(
    dataset: &LabeledDataset<S>,
    sizes: SplitSizes,
    seed: u64,
    stratified: bool,
) -> Result<FourWaySplit<S>> {
    let mut parts = partition(dataset, &sizes.as_array(), seed, stratified)?;
    let shadow_test = parts.pop().expect("four parts");
    let shadow_train = parts.pop().expect("four parts");
    let test = parts.pop().expect("four parts");
    let train = parts.pop().expect("four parts");
    Ok(FourWaySplit { train, test, shadow_train, shadow_test })
}
