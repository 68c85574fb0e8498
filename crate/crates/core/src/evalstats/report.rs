use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CorrelationResult, SignificanceMethod, TauVariant};
use crate::corpus::DatasetKind;

/// One metric evaluated on one dataset. Correlation datasets fill
/// `coefficient`; PASCAL50s fills `accuracy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: DatasetKind,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<TauVariant>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<SignificanceMethod>,
    pub n: usize,
}

impl MetricReport {
    pub fn correlation(dataset: DatasetKind, metric: impl Into<String>, r: &CorrelationResult) -> Self {
        Self {
            dataset,
            metric: metric.into(),
            variant: Some(r.variant),
            coefficient: Some(r.coefficient),
            accuracy: None,
            p_value: Some(r.p_value),
            method: Some(r.method),
            n: r.n,
        }
    }

    /// `p_value` is from the exact sign test, so `method` is `Exact` when given.
    pub fn accuracy(
        dataset: DatasetKind,
        metric: impl Into<String>,
        accuracy: f64,
        p_value: Option<f64>,
        n: usize,
    ) -> Self {
        Self {
            dataset,
            metric: metric.into(),
            variant: None,
            coefficient: None,
            accuracy: Some(accuracy),
            method: p_value.map(|_| SignificanceMethod::Exact),
            p_value,
            n,
        }
    }

    /// The headline number: the coefficient or the accuracy.
    pub fn value(&self) -> Option<f64> {
        self.coefficient.or(self.accuracy)
    }
}

/// Markdown table with one row per metric (sorted by name) and one column
/// per dataset. Correlations carry a `*` when `p < 0.05`; missing cells
/// show `-`.
pub fn markdown_table(reports: &[MetricReport]) -> String {
    let mut rows: BTreeMap<&str, BTreeMap<DatasetKind, &MetricReport>> = BTreeMap::new();
    for r in reports {
        rows.entry(r.metric.as_str()).or_default().insert(r.dataset, r);
    }
    let mut out = String::from("| Metric |");
    for d in DatasetKind::ALL {
        out.push_str(&format!(" {} |", d.name()));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(DatasetKind::ALL.len()));
    out.push('\n');
    for (metric, cells) in rows {
        out.push_str(&format!("| {metric} |"));
        for d in DatasetKind::ALL {
            let cell = match cells.get(&d).and_then(|r| r.value().map(|v| (v, r.p_value))) {
                Some((v, Some(p))) if p < 0.05 => format!("{v:.3}*"),
                Some((v, _)) => format!("{v:.3}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}
