//! Reject-option decisions, accuracy, ARQ and referral curves.
//!
//! An item is accepted when the margin between its two most probable classes
//! is at least `epsilon` times the standard deviation of the top class.

use alloc::format;
use alloc::vec::Vec;

use crate::curve::{is_strictly_increasing, CurveSeries};
use crate::error::{Error, Result};
use crate::metrics::{argmax, per_class_std, predictive_mean};
use crate::tensor::{LabelSet, McSampleSet};

/// y label used by curves that report 1.0 for an empty retained set.
pub const RETAINED_ACCURACY: &str = "accuracy (empty=1)";

/// Accept/reject decision with the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    pub margin: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOutcome {
    pub item: usize,
    pub accepted: bool,
    pub margin: f64,
    pub threshold: f64,
    pub predicted_class: usize,
    /// Present only when labels were supplied.
    pub correct: Option<bool>,
}

/// Cost parameters of the accuracy-rejection quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArqParams {
    pub epsilon: f64,
    /// Cost per accepted misclassification.
    pub alpha: f64,
    /// Cost per rejection.
    pub beta: f64,
}

impl ArqParams {
    pub fn new(epsilon: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("alpha", alpha), ("beta", beta)] {
            check_nonnegative(name, v)?;
        }
        Ok(Self {
            epsilon,
            alpha,
            beta,
        })
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {v}"
        )))
    }
}

/// Accept iff `P1 - P2 >= epsilon * std[argmax]`.
pub fn acceptance_rule(mean_probs: &[f64], class_stds: &[f64], epsilon: f64) -> Result<Decision> {
    if mean_probs.len() < 2 {
        return Err(Error::InvalidDimensions(
            "at least two classes are required",
        ));
    }
    if class_stds.len() != mean_probs.len() {
        return Err(Error::LengthMismatch {
            left: mean_probs.len(),
            right: class_stds.len(),
        });
    }
    check_nonnegative("epsilon", epsilon)?;
    if class_stds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidParameter(
            "class standard deviations must be finite and >= 0".into(),
        ));
    }
    let top = argmax(mean_probs);
    let runner_up = mean_probs
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != top)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = (mean_probs[top] - runner_up).abs();
    let threshold = epsilon * class_stds[top];
    Ok(Decision {
        accepted: margin >= threshold,
        margin,
        threshold,
    })
}

struct ItemSummary {
    mean: Vec<f64>,
    stds: Vec<f64>,
    predicted: usize,
}

fn summarize(set: &McSampleSet) -> Vec<ItemSummary> {
    (0..set.items())
        .map(|i| {
            let mean = predictive_mean(set, i).expect("item index is in range");
            let stds = per_class_std(set, i).expect("item index is in range");
            let predicted = argmax(&mean);
            ItemSummary {
                mean,
                stds,
                predicted,
            }
        })
        .collect()
}

fn decide_all(
    summaries: &[ItemSummary],
    labels: Option<&[usize]>,
    epsilon: f64,
) -> Result<Vec<SelectionOutcome>> {
    summaries
        .iter()
        .enumerate()
        .map(|(item, s)| {
            let d = acceptance_rule(&s.mean, &s.stds, epsilon)?;
            Ok(SelectionOutcome {
                item,
                accepted: d.accepted,
                margin: d.margin,
                threshold: d.threshold,
                predicted_class: s.predicted,
                correct: labels.map(|l| l[item] == s.predicted),
            })
        })
        .collect()
}

/// Applies the acceptance rule to every item of `set`.
pub fn select(
    set: &McSampleSet,
    labels: Option<&LabelSet>,
    epsilon: f64,
) -> Result<Vec<SelectionOutcome>> {
    if let Some(l) = labels {
        l.check_against(set)?;
    }
    decide_all(&summarize(set), labels.map(LabelSet::as_slice), epsilon)
}

/// Fraction of predictions equal to their label.
pub fn accuracy(predictions: &[usize], labels: &LabelSet) -> Result<f64> {
    let labels = labels.as_slice();
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Accuracy-rejection quotient:
/// `(#accepted-correct - alpha * #accepted-wrong - beta * #rejected) / N`.
pub fn arq(outcomes: &[SelectionOutcome], params: &ArqParams) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Empty);
    }
    let mut correct = 0usize;
    let mut wrong = 0usize;
    let mut rejected = 0usize;
    for o in outcomes {
        let is_correct = o.correct.ok_or(Error::MissingLabels(o.item))?;
        match (o.accepted, is_correct) {
            (true, true) => correct += 1,
            (true, false) => wrong += 1,
            (false, _) => rejected += 1,
        }
    }
    let score = correct as f64 - params.alpha * wrong as f64 - params.beta * rejected as f64;
    Ok(score / outcomes.len() as f64)
}

/// ARQ evaluated at every `epsilon` of a strictly increasing, nonnegative grid.
pub fn arq_sweep(
    set: &McSampleSet,
    labels: &LabelSet,
    epsilons: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<CurveSeries> {
    labels.check_against(set)?;
    if !is_strictly_increasing(epsilons.iter().copied()) {
        return Err(Error::InvalidParameter(
            "epsilon grid must be strictly increasing".into(),
        ));
    }
    let summaries = summarize(set);
    let points = epsilons
        .iter()
        .map(|&epsilon| {
            let params = ArqParams::new(epsilon, alpha, beta)?;
            let outcomes = decide_all(&summaries, Some(labels.as_slice()), epsilon)?;
            Ok((epsilon, arq(&outcomes, &params)?))
        })
        .collect::<Result<Vec<_>>>()?;
    CurveSeries::new("epsilon", "arq", points)
}

/// Number of items referred away at `fraction`: the ceiling of `fraction * n`,
/// with products within 1e-9 of an integer snapped to it so that decimal
/// fractions such as 0.7 of 10 refer exactly 7 items.
pub fn referral_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let nearest = libm::round(x);
    let k = if (x - nearest).abs() <= 1e-9 {
        nearest
    } else {
        libm::ceil(x)
    };
    (k.max(0.0) as usize).min(n)
}

fn check_fractions(values: &[f64], what: &str) -> Result<()> {
    if !is_strictly_increasing(values.iter().copied()) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be strictly increasing"
        )));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter(format!("{what} must lie in [0,1]")));
    }
    Ok(())
}

fn retained_accuracy(correct: &[bool], retained: impl Iterator<Item = usize>) -> f64 {
    let (mut n, mut hits) = (0usize, 0usize);
    for i in retained {
        n += 1;
        hits += correct[i] as usize;
    }
    if n == 0 {
        1.0
    } else {
        hits as f64 / n as f64
    }
}

/// Accuracy of the remaining items after referring the most uncertain ones.
///
/// Ties in uncertainty refer the lower item index first. Referring every item
/// reports 1.0.
pub fn referral_curve(
    uncertainties: &[f64],
    correct: &[bool],
    fractions: &[f64],
) -> Result<CurveSeries> {
    if uncertainties.len() != correct.len() {
        return Err(Error::LengthMismatch {
            left: uncertainties.len(),
            right: correct.len(),
        });
    }
    if uncertainties.is_empty() {
        return Err(Error::Empty);
    }
    if uncertainties.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite);
    }
    check_fractions(fractions, "referral fractions")?;
    let n = uncertainties.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        uncertainties[b]
            .total_cmp(&uncertainties[a])
            .then(a.cmp(&b))
    });
    let points = fractions
        .iter()
        .map(|&r| {
            let referred = referral_count(r, n);
            (
                r,
                retained_accuracy(correct, order[referred..].iter().copied()),
            )
        })
        .collect();
    CurveSeries::new("referral_fraction", RETAINED_ACCURACY, points)
}

/// Accuracy over items whose normalized uncertainty is at most each threshold.
pub fn accuracy_vs_threshold(
    uncertainties: &[f64],
    correct: &[bool],
    thresholds: &[f64],
) -> Result<CurveSeries> {
    if uncertainties.len() != correct.len() {
        return Err(Error::LengthMismatch {
            left: uncertainties.len(),
            right: correct.len(),
        });
    }
    if let Some(&bad) = uncertainties.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::Unnormalized(bad));
    }
    if !is_strictly_increasing(thresholds.iter().copied()) {
        return Err(Error::InvalidParameter(
            "thresholds must be strictly increasing".into(),
        ));
    }
    let points = thresholds
        .iter()
        .map(|&u| {
            let retained = (0..uncertainties.len()).filter(|&i| uncertainties[i] <= u);
            (u, retained_accuracy(correct, retained))
        })
        .collect();
    CurveSeries::new("normalized_uncertainty", RETAINED_ACCURACY, points)
}
