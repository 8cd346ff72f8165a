//! Per-alpha metric aggregation and its CSV form.

use super::{MetricError, MetricValues, METRIC_NAMES};
use crate::numfmt::f64_17;

/// One aggregate row: a metric at one alpha.
#[derive(Clone, Debug)]
pub struct MetricRow {
    pub alpha: f64,
    pub metric: String,
    /// `None` when every sample in the group was missing.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n_missing: usize,
    pub n: usize,
}

/// Aggregate table: rows are (alpha, metric) pairs, alphas in input order.
#[derive(Clone, Debug, Default)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

/// CSV header for metric and sweep reports.
pub const REPORT_HEADER: &str = "alpha,metric,mean,std,n_missing";

/// Aggregates per-image metric values grouped by alpha. Missing values
/// (empty masks) are excluded from means, with counts reported.
pub fn metric_report(groups: &[(f64, Vec<MetricValues>)]) -> Result<MetricReport, MetricError> {
    let mut report = MetricReport::default();
    for (alpha, values) in groups {
        if values.is_empty() {
            return Err(MetricError::EmptyGroup(format!("alpha {alpha}")));
        }
        for name in METRIC_NAMES {
            let present: Vec<f64> = values.iter().filter_map(|v| v.get(name)).collect();
            let n_missing = values.len() - present.len();
            let (mean, std) = mean_std(&present);
            report.rows.push(MetricRow {
                alpha: *alpha,
                metric: name.to_string(),
                mean,
                std,
                n_missing,
                n: values.len(),
            });
        }
    }
    Ok(report)
}

/// (mean, population std); `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.max(0.0).sqrt()))
}

impl MetricReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&f64_17(row.alpha));
            out.push(',');
            out.push_str(&row.metric);
            out.push(',');
            if let Some(m) = row.mean {
                out.push_str(&f64_17(m));
            }
            out.push(',');
            if let Some(s) = row.std {
                out.push_str(&f64_17(s));
            }
            out.push(',');
            out.push_str(&row.n_missing.to_string());
            out.push('\n');
        }
        out
    }

    pub fn row(&self, alpha: f64, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.alpha == alpha && r.metric == metric)
    }
}
