//! Per-item uncertainty metrics computed from Monte-Carlo softmax samples.
//!
//! All variance-based quantities use the population (1/T) normalization and
//! entropies are in nats.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::McSampleSet;

/// One of the seven scalar uncertainty measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Sigma,
    Entropy,
    MutualInformation,
    Feinman,
    Leibig,
    KwonAleatoric,
    KwonEpistemic,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Sigma,
        Metric::Entropy,
        Metric::MutualInformation,
        Metric::Feinman,
        Metric::Leibig,
        Metric::KwonAleatoric,
        Metric::KwonEpistemic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Sigma => "sigma",
            Metric::Entropy => "entropy",
            Metric::MutualInformation => "mi",
            Metric::Feinman => "feinman",
            Metric::Leibig => "leibig",
            Metric::KwonAleatoric => "kwon-aleatoric",
            Metric::KwonEpistemic => "kwon-epistemic",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown metric `{s}`")))
    }
}

/// All uncertainty values for a single item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemUncertainty {
    pub item: usize,
    pub predicted_class: usize,
    pub mean_probs: Vec<f64>,
    pub sigma_uncertainty: f64,
    pub entropy: f64,
    pub mutual_information: f64,
    pub feinman: f64,
    pub leibig: f64,
    pub kwon_aleatoric: f64,
    pub kwon_epistemic: f64,
}

impl ItemUncertainty {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Sigma => self.sigma_uncertainty,
            Metric::Entropy => self.entropy,
            Metric::MutualInformation => self.mutual_information,
            Metric::Feinman => self.feinman,
            Metric::Leibig => self.leibig,
            Metric::KwonAleatoric => self.kwon_aleatoric,
            Metric::KwonEpistemic => self.kwon_epistemic,
        }
    }
}

/// Aleatoric and epistemic parts of Kwon's moment decomposition, reduced by trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KwonDecomposition {
    pub aleatoric: f64,
    pub epistemic: f64,
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = c;
        }
    }
    best
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log(p))
        .sum::<f64>()
}

/// Per-class mean over passes.
///
/// Accumulates offsets from the first pass, so identical passes reproduce
/// that pass exactly.
pub fn predictive_mean(set: &McSampleSet, item: usize) -> Result<Vec<f64>> {
    set.check_item(item)?;
    let anchor = set.row(0, item);
    let mut offset = vec![0.0; set.classes()];
    for row in set.item_rows(item).skip(1) {
        for ((o, &p), &a) in offset.iter_mut().zip(row).zip(anchor) {
            *o += p - a;
        }
    }
    let passes = set.passes() as f64;
    Ok(anchor
        .iter()
        .zip(&offset)
        .map(|(&a, &o)| a + o / passes)
        .collect())
}

fn anchored_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut values = values;
    let Some(anchor) = values.next() else {
        return 0.0;
    };
    let (mut offset, mut n) = (0.0, 1usize);
    for v in values {
        offset += v - anchor;
        n += 1;
    }
    anchor + offset / n as f64
}

pub fn predicted_class(set: &McSampleSet, item: usize) -> Result<usize> {
    Ok(argmax(&predictive_mean(set, item)?))
}

fn per_class_variance(set: &McSampleSet, item: usize, mean: &[f64]) -> Vec<f64> {
    let mut var = vec![0.0; set.classes()];
    for row in set.item_rows(item) {
        for ((v, &p), &m) in var.iter_mut().zip(row).zip(mean) {
            let d = p - m;
            *v += d * d;
        }
    }
    let passes = set.passes() as f64;
    var.iter_mut().for_each(|v| *v /= passes);
    var
}

/// Population standard deviation of each class probability across passes.
pub fn per_class_std(set: &McSampleSet, item: usize) -> Result<Vec<f64>> {
    let mean = predictive_mean(set, item)?;
    Ok(per_class_variance(set, item, &mean)
        .into_iter()
        .map(libm::sqrt)
        .collect())
}

/// Mean over classes of the per-class standard deviation.
pub fn sigma_uncertainty(set: &McSampleSet, item: usize) -> Result<f64> {
    let std = per_class_std(set, item)?;
    Ok(std.iter().sum::<f64>() / set.classes() as f64)
}

pub fn predictive_entropy(set: &McSampleSet, item: usize) -> Result<f64> {
    Ok(entropy(&predictive_mean(set, item)?))
}

/// Entropy of the mean minus the mean of per-pass entropies, clamped at zero.
pub fn mutual_information(set: &McSampleSet, item: usize) -> Result<f64> {
    let total = predictive_entropy(set, item)?;
    let expected = anchored_mean(set.item_rows(item).map(entropy));
    Ok((total - expected).max(0.0))
}

/// Trace of the empirical covariance of the sample vectors.
pub fn feinman_uncertainty(set: &McSampleSet, item: usize) -> Result<f64> {
    let mean = predictive_mean(set, item)?;
    Ok(per_class_variance(set, item, &mean).iter().sum())
}

/// Standard deviation of the predicted class probability.
pub fn leibig_uncertainty(set: &McSampleSet, item: usize) -> Result<f64> {
    let mean = predictive_mean(set, item)?;
    let top = argmax(&mean);
    Ok(per_class_std(set, item)?[top])
}

pub fn kwon_decomposition(set: &McSampleSet, item: usize) -> Result<KwonDecomposition> {
    let mean = predictive_mean(set, item)?;
    let mut aleatoric = 0.0;
    let mut epistemic = 0.0;
    // trace(diag(p_t) - p_t p_t^T) and trace((p_t - mu)(p_t - mu)^T), pass by pass
    for row in set.item_rows(item) {
        aleatoric += row.iter().map(|&p| p * (1.0 - p)).sum::<f64>();
        epistemic += row
            .iter()
            .zip(&mean)
            .map(|(&p, &m)| (p - m) * (p - m))
            .sum::<f64>();
    }
    let passes = set.passes() as f64;
    Ok(KwonDecomposition {
        aleatoric: aleatoric / passes,
        epistemic: epistemic / passes,
    })
}

/// Evaluates every single-item metric for `item`.
pub fn compute_item(set: &McSampleSet, item: usize) -> Result<ItemUncertainty> {
    let mean_probs = predictive_mean(set, item)?;
    let kwon = kwon_decomposition(set, item)?;
    Ok(ItemUncertainty {
        item,
        predicted_class: argmax(&mean_probs),
        sigma_uncertainty: sigma_uncertainty(set, item)?,
        entropy: entropy(&mean_probs),
        mutual_information: mutual_information(set, item)?,
        feinman: feinman_uncertainty(set, item)?,
        leibig: leibig_uncertainty(set, item)?,
        kwon_aleatoric: kwon.aleatoric,
        kwon_epistemic: kwon.epistemic,
        mean_probs,
    })
}

pub fn compute_all(set: &McSampleSet) -> Vec<ItemUncertainty> {
    (0..set.items())
        .map(|i| compute_item(set, i).expect("item index is in range"))
        .collect()
}

/// Min-max normalization onto `[0, 1]`. A constant input maps to all zeros.
pub fn normalize_metric(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values
        .iter()
        .map(|v| ((v - min) / range).clamp(0.0, 1.0))
        .collect())
}
