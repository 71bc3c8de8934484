use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Ordered `(x, y)` points with axis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl CurveSeries {
    /// Builds a curve whose x values must be strictly increasing.
    pub fn new(
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if !is_strictly_increasing(points.iter().map(|p| p.0)) {
            return Err(Error::InvalidParameter(
                "curve x values must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        })
    }

    /// Builds a curve whose x values only need to be nondecreasing.
    ///
    /// Binned statistics produce equal x values when whole bins share one value.
    pub fn nondecreasing(
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if points
            .windows(2)
            .any(|w| w[0].0.is_nan() || w[1].0.is_nan() || w[0].0 > w[1].0)
        {
            return Err(Error::InvalidParameter(
                "curve x values must be nondecreasing".into(),
            ));
        }
        Ok(Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        })
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) fn is_strictly_increasing(mut xs: impl Iterator<Item = f64>) -> bool {
    let Some(mut prev) = xs.next() else {
        return true;
    };
    if !prev.is_finite() {
        return false;
    }
    for x in xs {
        if !x.is_finite() || x <= prev {
            return false;
        }
        prev = x;
    }
    true
}
