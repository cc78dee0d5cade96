//! Attack evaluation: balanced accuracy, precision, recall, membership
//! advantage, per-class breakdowns, and aggregation over repeated attacks.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::Serialize;

use crate::attacks::{infer, Adversary};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::BlackBox;
use crate::scalar::Scalar;
use crate::shadow::Membership;

/// Confusion counts with `In` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    fn add(&mut self, truth: Membership, decision: Membership) {
        match (truth, decision) {
            (Membership::In, Membership::In) => self.true_pos += 1,
            (Membership::In, Membership::Out) => self.false_neg += 1,
            (Membership::Out, Membership::In) => self.false_pos += 1,
            (Membership::Out, Membership::Out) => self.true_neg += 1,
        }
    }

    fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }

    /// Rates derived from the counts. Every rate that would divide by zero
    /// is reported absent rather than imputed; accuracy is the balanced form
    /// (mean of the two conditional rates) and so needs both sides present.
    pub fn rates(&self) -> MetricSet {
        let members = self.true_pos + self.false_neg;
        let nonmembers = self.false_pos + self.true_neg;
        let recall = if members > 0 {
            Some(self.true_pos as f64 / members as f64)
        } else {
            None
        };
        let tnr = if nonmembers > 0 {
            Some(self.true_neg as f64 / nonmembers as f64)
        } else {
            None
        };
        let accuracy = match (recall, tnr) {
            (Some(r), Some(t)) => Some(0.5 * (r + t)),
            _ => None,
        };
        let predicted_in = self.true_pos + self.false_pos;
        let precision = if predicted_in > 0 {
            Some(self.true_pos as f64 / predicted_in as f64)
        } else {
            None
        };
        MetricSet {
            accuracy,
            precision,
            recall,
            advantage: accuracy.map(|a| 2.0 * a - 1.0),
        }
    }
}

/// The four attack metrics; absent entries are undefined (0/0), never 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub advantage: Option<f64>,
}

/// Metrics for one slice (a class, or the overall evaluation).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SliceReport {
    /// Member / non-member record totals, summed across repeats.
    pub n_in: usize,
    pub n_out: usize,
    pub counts: ConfusionCounts,
    /// Metric values; means when `repeats > 1`.
    pub metrics: MetricSet,
    /// Population standard deviation across repeats; zeros for a single
    /// evaluation.
    pub dispersion: MetricSet,
    /// Number of aggregated repeats whose precision was undefined and was
    /// therefore excluded from the mean.
    pub undefined_precision: usize,
}

impl SliceReport {
    fn from_counts(counts: ConfusionCounts) -> Self {
        let metrics = counts.rates();
        let zero = |m: Option<f64>| m.map(|_| 0.0);
        Self {
            n_in: counts.true_pos + counts.false_neg,
            n_out: counts.false_pos + counts.true_neg,
            counts,
            metrics,
            dispersion: MetricSet {
                accuracy: zero(metrics.accuracy),
                precision: zero(metrics.precision),
                recall: zero(metrics.recall),
                advantage: zero(metrics.advantage),
            },
            undefined_precision: usize::from(metrics.precision.is_none()),
        }
    }
}

/// Full evaluation report: per-class slices plus the overall slice.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsReport {
    pub per_class: BTreeMap<usize, SliceReport>,
    pub overall: SliceReport,
    /// Number of attack evaluations aggregated into this report.
    pub repeats: usize,
}

/// Evaluates an adversary against a black-box model on known members and
/// non-members. Accuracy is balanced (half the member rate plus half the
/// non-member rate) regardless of set sizes; precision is counted over the
/// union and reported absent when the adversary never answers `In`.
pub fn evaluate<S: Scalar>(
    adv: &Adversary<S>,
    model: &dyn BlackBox<S>,
    members: &LabeledDataset<S>,
    nonmembers: &LabeledDataset<S>,
) -> Result<MetricsReport> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::InvalidInput(
            "evaluation needs non-empty member and non-member sets".into(),
        ));
    }
    let member_ids: HashSet<u64> = members.iter().map(|r| r.id).collect();
    if nonmembers.iter().any(|r| member_ids.contains(&r.id)) {
        return Err(Error::Integrity(
            "member and non-member sets share a record id".into(),
        ));
    }

    let mut overall = ConfusionCounts::default();
    let mut per_class: BTreeMap<usize, ConfusionCounts> = BTreeMap::new();
    for (dataset, truth) in [(members, Membership::In), (nonmembers, Membership::Out)] {
        for rec in dataset.iter() {
            let prediction = model.query(&rec.features)?;
            let decision = infer(adv, rec.label, &prediction)?;
            overall.add(truth, decision);
            per_class.entry(rec.label).or_default().add(truth, decision);
        }
    }

    Ok(MetricsReport {
        per_class: per_class
            .into_iter()
            .map(|(c, counts)| (c, SliceReport::from_counts(counts)))
            .collect(),
        overall: SliceReport::from_counts(overall),
        repeats: 1,
    })
}

fn aggregate_slice(slices: &[&SliceReport]) -> SliceReport {
    let mut counts = ConfusionCounts::default();
    for s in slices {
        counts.merge(&s.counts);
    }
    let pick = |f: fn(&MetricSet) -> Option<f64>| -> (Option<f64>, Option<f64>, usize) {
        let values: Vec<f64> = slices.iter().filter_map(|s| f(&s.metrics)).collect();
        let missing = slices.len() - values.len();
        if values.is_empty() {
            return (None, None, missing);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        (Some(mean), Some(var.sqrt()), missing)
    };

    let (acc, acc_sd, _) = pick(|m| m.accuracy);
    let (prec, prec_sd, prec_missing) = pick(|m| m.precision);
    let (rec, rec_sd, _) = pick(|m| m.recall);
    let (adv, adv_sd, _) = pick(|m| m.advantage);

    SliceReport {
        n_in: slices.iter().map(|s| s.n_in).sum(),
        n_out: slices.iter().map(|s| s.n_out).sum(),
        counts,
        metrics: MetricSet { accuracy: acc, precision: prec, recall: rec, advantage: adv },
        dispersion: MetricSet {
            accuracy: acc_sd,
            precision: prec_sd,
            recall: rec_sd,
            advantage: adv_sd,
        },
        undefined_precision: slices.iter().map(|s| s.undefined_precision).sum::<usize>()
            + prec_missing.saturating_sub(
                slices.iter().filter(|s| s.metrics.precision.is_none()).count(),
            ),
    }
}

/// Aggregates repeated attack evaluations: per-metric arithmetic mean and
/// population standard deviation, with undefined precisions excluded from
/// the mean and counted. All reports must cover the same class universe.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to aggregate".into()))?;
    let classes: Vec<usize> = first.per_class.keys().copied().collect();
    for (i, report) in reports.iter().enumerate() {
        let keys: Vec<usize> = report.per_class.keys().copied().collect();
        if keys != classes {
            return Err(Error::InvalidInput(format!(
                "report {i} covers classes {keys:?}, expected {classes:?}"
            )));
        }
    }

    let mut per_class = BTreeMap::new();
    for class in classes {
        let slices: Vec<&SliceReport> = reports.iter().map(|r| &r.per_class[&class]).collect();
        per_class.insert(class, aggregate_slice(&slices));
    }
    let overall: Vec<&SliceReport> = reports.iter().map(|r| &r.overall).collect();
    Ok(MetricsReport {
        per_class,
        overall: aggregate_slice(&overall),
        repeats: reports.iter().map(|r| r.repeats).sum(),
    })
}

fn metric_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Writes a report as `class,accuracy,precision,recall,advantage,n_in,n_out`
/// with a final `overall` row. Undefined metrics become empty cells.
pub fn write_report_csv<W: Write>(report: &MetricsReport, mut out: W) -> Result<()> {
    writeln!(out, "class,accuracy,precision,recall,advantage,n_in,n_out")?;
    for (class, slice) in &report.per_class {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            class,
            metric_cell(slice.metrics.accuracy),
            metric_cell(slice.metrics.precision),
            metric_cell(slice.metrics.recall),
            metric_cell(slice.metrics.advantage),
            slice.n_in,
            slice.n_out
        )?;
    }
    let o = &report.overall;
    writeln!(
        out,
        "overall,{},{},{},{},{},{}",
        metric_cell(o.metrics.accuracy),
        metric_cell(o.metrics.precision),
        metric_cell(o.metrics.recall),
        metric_cell(o.metrics.advantage),
        o.n_in,
        o.n_out
    )?;
    Ok(())
}

/// JSON mirror of the report, dispersion fields included.
pub fn write_report_json<W: Write>(report: &MetricsReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))
}
