use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(&'static str),
    #[error("probability out of [0,1] at pass {pass}, item {item}, class {class}: {value}")]
    ProbabilityOutOfRange {
        pass: usize,
        item: usize,
        class: usize,
        value: f64,
    },
    #[error("row sum out of tolerance at pass {pass}, item {item}: {sum}")]
    RowSumOutOfTolerance { pass: usize, item: usize, sum: f64 },
    #[error("class names: expected {expected}, found {found}")]
    ClassNames { expected: usize, found: usize },
    #[error("label {label} at item {item} is not a class index below {classes}")]
    LabelOutOfRange {
        item: usize,
        label: usize,
        classes: usize,
    },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("too few items: need at least {needed}, found {found}")]
    TooFewItems { needed: usize, found: usize },
    #[error("value {0} is outside [0,1]; normalize first")]
    Unnormalized(f64),
    #[error("outcome for item {0} carries no correctness flag; labels are required")]
    MissingLabels(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("patch at ({x},{y}) of size {size} exceeds {width}x{height} image")]
    PatchOutOfBounds {
        x: usize,
        y: usize,
        size: usize,
        width: usize,
        height: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
