//! Statistics relating estimated uncertainty to prediction error.

use alloc::vec::Vec;

use crate::curve::CurveSeries;
use crate::error::{Error, Result};
use crate::metrics::{compute_all, ItemUncertainty, Metric};
use crate::tensor::{LabelSet, McSampleSet};

/// Default number of bins for binned correlation.
pub const DEFAULT_BINS: usize = 20;

/// A statistic that may be undefined for the given data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Value(f64),
    /// The statistic is mathematically undefined (e.g. a constant series).
    Degenerate,
    /// The inputs needed for the statistic are missing (e.g. an empty group).
    Unavailable,
}

impl Statistic {
    pub fn value(self) -> Option<f64> {
        match self {
            Statistic::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Fractional ranks (1-based, ties share the average rank).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Statistic> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewItems {
            needed: 3,
            found: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Statistic::Degenerate);
    }
    Ok(Statistic::Value(
        (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0),
    ))
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact 1-Wasserstein distance between two empirical distributions on the line:
/// the area between their empirical CDFs.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let a = sorted(a);
    let b = sorted(b);
    let (m, n) = (a.len(), b.len());
    let scale = (m as f64) * (n as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut area = 0.0;
    while i < m || j < n {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        // |F_a - F_b| on [prev, next), kept in integer form until the last step
        let gap = (i * n).abs_diff(j * m) as f64 / scale;
        area += gap * (next - prev);
        while i < m && a[i] == next {
            i += 1;
        }
        while j < n && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(area)
}

/// Uncertainties split by whether the prediction matched the label, in input order.
pub fn split_by_correctness(
    uncertainties: &[f64],
    predictions: &[usize],
    labels: &LabelSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let labels = labels.as_slice();
    if uncertainties.len() != predictions.len() || predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: uncertainties.len(),
            right: if uncertainties.len() != predictions.len() {
                predictions.len()
            } else {
                labels.len()
            },
        });
    }
    let mut correct = Vec::new();
    let mut erroneous = Vec::new();
    for ((&u, p), l) in uncertainties.iter().zip(predictions).zip(labels) {
        if p == l {
            correct.push(u);
        } else {
            erroneous.push(u);
        }
    }
    Ok((correct, erroneous))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Correct,
    Erroneous,
}

/// Five-number summary. Quartiles are medians of the lower and upper halves,
/// with the overall median excluded from both halves when the count is odd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boxplot {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxplotSummary {
    pub group: Group,
    pub stats: Boxplot,
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn boxplot_summary(values: &[f64]) -> Result<Boxplot> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let v = sorted(values);
    let n = v.len();
    let median = median_of_sorted(&v);
    let (q1, q3) = if n == 1 {
        (median, median)
    } else {
        (
            median_of_sorted(&v[..n / 2]),
            median_of_sorted(&v[n.div_ceil(2)..]),
        )
    };
    Ok(Boxplot {
        min: v[0],
        q1,
        median,
        q3,
        max: v[n - 1],
        count: n,
    })
}

/// Sorts items by uncertainty, splits them into `n_bins` contiguous bins of
/// equal count (the remainder goes to the earliest bins), and reports
/// `(mean bin uncertainty, bin accuracy)` per bin.
pub fn binned_uncertainty_accuracy(
    uncertainties: &[f64],
    correct: &[bool],
    n_bins: usize,
) -> Result<CurveSeries> {
    if uncertainties.len() != correct.len() {
        return Err(Error::LengthMismatch {
            left: uncertainties.len(),
            right: correct.len(),
        });
    }
    if n_bins < 2 {
        return Err(Error::InvalidParameter(
            "at least two bins are required".into(),
        ));
    }
    if uncertainties.len() < n_bins {
        return Err(Error::TooFewItems {
            needed: n_bins,
            found: uncertainties.len(),
        });
    }
    if uncertainties.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = uncertainties.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        uncertainties[a]
            .total_cmp(&uncertainties[b])
            .then(a.cmp(&b))
    });
    let (base, extra) = (n / n_bins, n % n_bins);
    let mut points = Vec::with_capacity(n_bins);
    let mut start = 0;
    for k in 0..n_bins {
        let len = base + usize::from(k < extra);
        let bin = &order[start..start + len];
        let lo = uncertainties[bin[0]];
        let hi = uncertainties[bin[len - 1]];
        let mean = bin.iter().map(|&i| uncertainties[i]).sum::<f64>() / len as f64;
        let hits = bin.iter().filter(|&&i| correct[i]).count();
        // clamping keeps rounding from breaking the bin ordering
        points.push((mean.clamp(lo, hi), hits as f64 / len as f64));
        start += len;
    }
    CurveSeries::nondecreasing("mean_uncertainty", "accuracy", points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub metric: Metric,
    /// Spearman correlation between bin mean uncertainty and bin error rate.
    pub spearman_rho: Statistic,
    /// 1-Wasserstein distance between correct and erroneous uncertainty distributions.
    pub wasserstein: Statistic,
    pub n_correct: usize,
    pub n_error: usize,
}

/// Builds a [`CorrelationReport`] from already computed per-item uncertainties.
pub fn correlation_report(
    items: &[ItemUncertainty],
    labels: &LabelSet,
    metric: Metric,
    n_bins: usize,
) -> Result<CorrelationReport> {
    if items.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: items.len(),
            right: labels.len(),
        });
    }
    let values: Vec<f64> = items.iter().map(|u| u.value(metric)).collect();
    let predictions: Vec<usize> = items.iter().map(|u| u.predicted_class).collect();
    let correct: Vec<bool> = predictions
        .iter()
        .zip(labels.as_slice())
        .map(|(p, l)| p == l)
        .collect();
    let (good, bad) = split_by_correctness(&values, &predictions, labels)?;
    let wasserstein = if good.is_empty() || bad.is_empty() {
        Statistic::Unavailable
    } else {
        Statistic::Value(wasserstein_1d(&good, &bad)?)
    };
    let spearman_rho = if n_bins < 3 || values.len() < n_bins {
        Statistic::Unavailable
    } else {
        let bins = binned_uncertainty_accuracy(&values, &correct, n_bins)?;
        let xs: Vec<f64> = bins.xs().collect();
        let error_rate: Vec<f64> = bins.ys().map(|acc| 1.0 - acc).collect();
        spearman(&xs, &error_rate)?
    };
    Ok(CorrelationReport {
        metric,
        spearman_rho,
        wasserstein,
        n_correct: good.len(),
        n_error: bad.len(),
    })
}

pub fn error_uncertainty_report(
    set: &McSampleSet,
    labels: &LabelSet,
    metric: Metric,
    n_bins: usize,
) -> Result<CorrelationReport> {
    labels.check_against(set)?;
    correlation_report(&compute_all(set), labels, metric, n_bins)
}
