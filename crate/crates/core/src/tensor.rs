//! Monte-Carlo sample sets and label sets.
//!
//! A [`McSampleSet`] holds `passes × items × classes` softmax probabilities in
//! row-major `[pass][item][class]` order, so one full pass is contiguous.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Maximum row-sum deviation accepted by [`McSampleSet::new`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;
/// Maximum row-sum deviation that can be repaired by renormalization.
pub const REPAIRABLE_DRIFT: f64 = 1e-3;
/// Rows within this distance of 1 are left untouched by renormalization.
pub const NORMALIZED_TOLERANCE: f64 = 1e-12;

/// Softmax outputs of `passes` stochastic forward evaluations over `items` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct McSampleSet {
    passes: usize,
    items: usize,
    classes: usize,
    probs: Vec<f64>,
    class_names: Option<Vec<String>>,
}

impl McSampleSet {
    /// Builds a validated set. Every row must sum to 1 within [`ROW_SUM_TOLERANCE`].
    pub fn new(passes: usize, items: usize, classes: usize, probs: Vec<f64>) -> Result<Self> {
        check_shape(passes, items, classes, probs.len())?;
        check_values(&probs, items, classes)?;
        check_row_sums(&probs, items, classes, ROW_SUM_TOLERANCE)?;
        Ok(Self {
            passes,
            items,
            classes,
            probs,
            class_names: None,
        })
    }

    /// Builds a set from exporter output that may carry float drift.
    ///
    /// Rows deviating from 1 by at most [`ROW_SUM_TOLERANCE`] are kept bit-for-bit;
    /// rows up to [`REPAIRABLE_DRIFT`] away are rescaled; anything further is an error.
    pub fn from_drifted(
        passes: usize,
        items: usize,
        classes: usize,
        mut probs: Vec<f64>,
    ) -> Result<Self> {
        check_shape(passes, items, classes, probs.len())?;
        check_values(&probs, items, classes)?;
        rescale_rows(&mut probs, items, classes, ROW_SUM_TOLERANCE)?;
        Self::new(passes, items, classes, probs)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.classes {
            return Err(Error::ClassNames {
                expected: self.classes,
                found: names.len(),
            });
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Flat `[pass][item][class]` view of all probabilities.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// The class distribution emitted by `pass` for `item`.
    ///
    /// Panics if either index is out of range.
    pub fn row(&self, pass: usize, item: usize) -> &[f64] {
        assert!(pass < self.passes && item < self.items);
        let start = (pass * self.items + item) * self.classes;
        &self.probs[start..start + self.classes]
    }

    /// Iterates the `passes` rows belonging to `item`.
    pub fn item_rows(&self, item: usize) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.passes).map(move |t| self.row(t, item))
    }

    pub fn check_item(&self, item: usize) -> Result<()> {
        if item < self.items {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: item,
                len: self.items,
            })
        }
    }

    /// Rescales every row by its reciprocal sum.
    ///
    /// Rows already within [`NORMALIZED_TOLERANCE`] of 1 are left untouched, which
    /// makes the operation idempotent.
    pub fn renormalize(&self) -> Self {
        let mut out = self.clone();
        rescale_rows(
            &mut out.probs,
            self.items,
            self.classes,
            NORMALIZED_TOLERANCE,
        )
        .expect("a validated set is always within repairable drift");
        out
    }
}

/// Renormalizes raw `[pass][item][class]` probabilities in place.
///
/// Fails if any row sum lies outside `[1 - 1e-3, 1 + 1e-3]`.
pub fn renormalize(probs: &mut [f64], items: usize, classes: usize) -> Result<()> {
    if classes == 0 || items == 0 || !probs.len().is_multiple_of(items * classes) {
        return Err(Error::InvalidDimensions(
            "length is not a multiple of items × classes",
        ));
    }
    rescale_rows(probs, items, classes, NORMALIZED_TOLERANCE)
}

fn rescale_rows(probs: &mut [f64], items: usize, classes: usize, keep_within: f64) -> Result<()> {
    check_row_sums(probs, items, classes, REPAIRABLE_DRIFT)?;
    for row in probs.chunks_exact_mut(classes) {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > keep_within {
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    Ok(())
}

fn check_shape(passes: usize, items: usize, classes: usize, len: usize) -> Result<()> {
    if passes == 0 {
        return Err(Error::InvalidDimensions("at least one pass is required"));
    }
    if items == 0 {
        return Err(Error::InvalidDimensions("at least one item is required"));
    }
    if classes < 2 {
        return Err(Error::InvalidDimensions(
            "at least two classes are required",
        ));
    }
    let expected = passes
        .checked_mul(items)
        .and_then(|v| v.checked_mul(classes))
        .ok_or(Error::InvalidDimensions("dimensions overflow"))?;
    if expected != len {
        return Err(Error::DimensionMismatch {
            expected,
            found: len,
        });
    }
    Ok(())
}

fn check_values(probs: &[f64], items: usize, classes: usize) -> Result<()> {
    for (k, &value) in probs.iter().enumerate() {
        // NaN fails the range test
        if !(0.0..=1.0).contains(&value) {
            let row = k / classes;
            return Err(Error::ProbabilityOutOfRange {
                pass: row / items,
                item: row % items,
                class: k % classes,
                value,
            });
        }
    }
    Ok(())
}

fn check_row_sums(probs: &[f64], items: usize, classes: usize, tolerance: f64) -> Result<()> {
    for (row, values) in probs.chunks_exact(classes).enumerate() {
        let sum: f64 = values.iter().sum();
        if sum.is_nan() || (sum - 1.0).abs() > tolerance {
            return Err(Error::RowSumOutOfTolerance {
                pass: row / items,
                item: row % items,
                sum,
            });
        }
    }
    Ok(())
}

/// Ground-truth class index per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<usize>,
}

impl LabelSet {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self> {
        if let Some((item, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::LabelOutOfRange {
                item,
                label,
                classes,
            });
        }
        Ok(Self { labels })
    }

    /// Checks that these labels can be paired with `set`.
    pub fn check_against(&self, set: &McSampleSet) -> Result<()> {
        if self.labels.len() != set.items() {
            return Err(Error::LengthMismatch {
                left: set.items(),
                right: self.labels.len(),
            });
        }
        if let Some((item, &label)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= set.classes())
        {
            return Err(Error::LabelOutOfRange {
                item,
                label,
                classes: set.classes(),
            });
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
