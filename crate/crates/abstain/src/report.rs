//! Analysis reports: per-item metrics, summaries, curves and the config echo.

use abstain_core::metrics::compute_item;
use abstain_core::selection::{accuracy, arq};
use abstain_core::stats::{
    binned_uncertainty_accuracy, boxplot_summary, correlation_report, split_by_correctness, Boxplot,
};
use abstain_core::{
    ArqParams, CurveSeries, ItemUncertainty, LabelSet, McSampleSet, Metric, SelectionOutcome,
    Statistic,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const REPORT_VERSION: u64 = 1;

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-item metrics computed on a pool of `threads` workers (0 means one per
/// core). Output order is item order whatever the worker count.
pub fn compute_items(set: &McSampleSet, threads: usize) -> Result<Vec<ItemUncertainty>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    pool.install(|| {
        (0..set.items())
            .into_par_iter()
            .map(|i| compute_item(set, i))
            .collect::<abstain_core::Result<Vec<_>>>()
    })
    .map_err(Error::from)
}

fn statistic_json(s: Statistic) -> (Value, &'static str) {
    match s {
        Statistic::Value(v) => (json!(v), "value"),
        Statistic::Degenerate => (Value::Null, "degenerate"),
        Statistic::Unavailable => (Value::Null, "unavailable"),
    }
}

fn boxplot_json(b: Option<Boxplot>) -> Value {
    match b {
        None => Value::Null,
        Some(b) => json!({
            "min": b.min,
            "q1": b.q1,
            "median": b.median,
            "q3": b.q3,
            "max": b.max,
            "count": b.count,
        }),
    }
}

pub fn curve_json(name: &str, curve: &CurveSeries) -> Value {
    json!({
        "name": name,
        "x_label": curve.x_label,
        "y_label": curve.y_label,
        "points": curve.points.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
    })
}

fn item_json(
    u: &ItemUncertainty,
    label: Option<usize>,
    selection: Option<&SelectionOutcome>,
) -> Value {
    let metrics: Map<String, Value> = Metric::ALL
        .iter()
        .map(|&m| (m.name().to_string(), json!(u.value(m))))
        .collect();
    let mut item = json!({
        "item": u.item,
        "predicted_class": u.predicted_class,
        "mean_probs": u.mean_probs,
        "metrics": metrics,
    });
    let obj = item.as_object_mut().expect("item is an object");
    if let Some(l) = label {
        obj.insert("label".into(), json!(l));
        obj.insert("correct".into(), json!(l == u.predicted_class));
    }
    if let Some(s) = selection {
        obj.insert(
            "selection".into(),
            json!({"accepted": s.accepted, "margin": s.margin, "threshold": s.threshold}),
        );
    }
    item
}

/// Report under construction. Sections that need labels stay empty without them.
pub struct Report<'a> {
    set: &'a McSampleSet,
    labels: Option<&'a LabelSet>,
    items: &'a [ItemUncertainty],
    selection: Option<&'a [SelectionOutcome]>,
    arq: Option<f64>,
    curves: Vec<Value>,
}

impl<'a> Report<'a> {
    pub fn new(
        set: &'a McSampleSet,
        labels: Option<&'a LabelSet>,
        items: &'a [ItemUncertainty],
    ) -> Result<Self> {
        if let Some(l) = labels {
            l.check_against(set)?;
        }
        if items.len() != set.items() {
            return Err(abstain_core::Error::LengthMismatch {
                left: set.items(),
                right: items.len(),
            }
            .into());
        }
        Ok(Report {
            set,
            labels,
            items,
            selection: None,
            arq: None,
            curves: Vec::new(),
        })
    }

    /// Attaches per-item decisions and, with labels, their ARQ.
    pub fn with_selection(
        mut self,
        outcomes: &'a [SelectionOutcome],
        params: &ArqParams,
    ) -> Result<Self> {
        if outcomes.len() != self.items.len() {
            return Err(abstain_core::Error::LengthMismatch {
                left: self.items.len(),
                right: outcomes.len(),
            }
            .into());
        }
        if self.labels.is_some() {
            self.arq = Some(arq(outcomes, params)?);
        }
        self.selection = Some(outcomes);
        Ok(self)
    }

    pub fn with_curve(mut self, name: &str, curve: &CurveSeries) -> Self {
        self.curves.push(curve_json(name, curve));
        self
    }

    /// Adds the binned uncertainty/accuracy curve for `metric` when labels
    /// are present and there are enough items for `bins` bins.
    pub fn with_binned_curve(self, metric: Metric, bins: usize) -> Result<Self> {
        let Some(labels) = self.labels else {
            return Ok(self);
        };
        if bins < 2 || self.items.len() < bins {
            return Ok(self);
        }
        let values: Vec<f64> = self.items.iter().map(|u| u.value(metric)).collect();
        let correct: Vec<bool> = self
            .items
            .iter()
            .zip(labels.as_slice())
            .map(|(u, &l)| u.predicted_class == l)
            .collect();
        let curve = binned_uncertainty_accuracy(&values, &correct, bins)?;
        Ok(self.with_curve(&format!("binned_{}", metric.name()), &curve))
    }

    fn summary(&self, bins: usize) -> Result<Value> {
        let mut summary = Map::new();
        let mut correlations = Map::new();
        let mut boxplots = Map::new();
        if let Some(labels) = self.labels {
            let predictions: Vec<usize> = self.items.iter().map(|u| u.predicted_class).collect();
            summary.insert("accuracy".into(), json!(accuracy(&predictions, labels)?));
            for metric in Metric::ALL {
                let r = correlation_report(self.items, labels, metric, bins)?;
                let (rho, rho_status) = statistic_json(r.spearman_rho);
                let (w1, w1_status) = statistic_json(r.wasserstein);
                correlations.insert(
                    metric.name().into(),
                    json!({
                        "spearman_rho": rho,
                        "spearman_status": rho_status,
                        "wasserstein": w1,
                        "wasserstein_status": w1_status,
                        "n_correct": r.n_correct,
                        "n_error": r.n_error,
                    }),
                );
                let values: Vec<f64> = self.items.iter().map(|u| u.value(metric)).collect();
                let (good, bad) = split_by_correctness(&values, &predictions, labels)?;
                let summarize = |v: &[f64]| {
                    if v.is_empty() {
                        Ok(None)
                    } else {
                        boxplot_summary(v).map(Some)
                    }
                };
                boxplots.insert(
                    metric.name().into(),
                    json!({
                        "correct": boxplot_json(summarize(&good)?),
                        "erroneous": boxplot_json(summarize(&bad)?),
                    }),
                );
            }
        }
        if let Some(a) = self.arq {
            summary.insert("arq".into(), json!(a));
        }
        if let Some(outcomes) = self.selection {
            summary.insert(
                "accepted".into(),
                json!(outcomes.iter().filter(|o| o.accepted).count()),
            );
        }
        summary.insert("correlations".into(), Value::Object(correlations));
        summary.insert("boxplots".into(), Value::Object(boxplots));
        Ok(Value::Object(summary))
    }

    /// Assembles the final JSON document.
    pub fn finish(self, input_digest: &str, bins: usize, config: Value) -> Result<Value> {
        let labels = self.labels.map(LabelSet::as_slice);
        let items: Vec<Value> = self
            .items
            .iter()
            .enumerate()
            .map(|(i, u)| item_json(u, labels.map(|l| l[i]), self.selection.map(|s| &s[i])))
            .collect();
        Ok(json!({
            "version": REPORT_VERSION,
            "input_digest": input_digest,
            "dims": {"t": self.set.passes(), "n": self.set.items(), "c": self.set.classes()},
            "items": items,
            "summary": self.summary(bins)?,
            "curves": self.curves,
            "config": config,
        }))
    }
}

/// Two-column CSV of a curve with `%.12g` numbers.
pub fn curve_csv(curve: &CurveSeries) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([curve.x_label.as_str(), curve.y_label.as_str()])?;
    for &(x, y) in &curve.points {
        w.write_record([crate::json::format_float(x), crate::json::format_float(y)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
