//! Summary CSV assembly.

use std::io::Write;

use mialab::metrics::SliceReport;
use mialab::Result;

use crate::experiment::ExperimentReport;

const METRICS: [&str; 4] = ["accuracy", "precision", "recall", "advantage"];

fn metric_value(slice: &SliceReport, metric: &str) -> (Option<f64>, Option<f64>, usize) {
    let (mean, std) = match metric {
        "accuracy" => (slice.metrics.accuracy, slice.dispersion.accuracy),
        "precision" => (slice.metrics.precision, slice.dispersion.precision),
        "recall" => (slice.metrics.recall, slice.dispersion.recall),
        "advantage" => (slice.metrics.advantage, slice.dispersion.advantage),
        _ => (None, None),
    };
    let undefined = if metric == "precision" { slice.undefined_precision } else { 0 };
    (mean, std, undefined)
}

/// One row per (cell, metric) over the overall slice:
/// `regime,kind,shadow_size,metric,mean,std,n_repeats,undefined_count`.
pub fn write_summary_csv<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    writeln!(out, "regime,kind,shadow_size,metric,mean,std,n_repeats,undefined_count")?;
    for cell in &report.cells {
        for metric in METRICS {
            let (mean, std, undefined) = metric_value(&cell.aggregate.overall, metric);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                cell.key.regime,
                cell.key.kind,
                cell.key.size,
                metric,
                mean.map(|v| format!("{v:.6}")).unwrap_or_default(),
                std.map(|v| format!("{v:.6}")).unwrap_or_default(),
                cell.aggregate.repeats,
                undefined,
            )?;
        }
    }
    Ok(())
}
