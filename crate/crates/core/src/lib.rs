//! Uncertainty estimation and reject-option decisions for Monte-Carlo
//! classifier outputs.
//!
//! The crate is `no_std` and only needs `alloc`. Input is a
//! [`McSampleSet`](tensor::McSampleSet): the softmax vectors produced by `T`
//! stochastic forward passes (MC dropout or dropweights) over `N` items.
//! From it the crate derives
//!
//! - per-item uncertainty metrics ([`metrics`]),
//! - accept/reject decisions, ARQ scores and referral curves ([`selection`]),
//! - correlation between uncertainty and error ([`stats`]),
//!
//! and it also provides a seeded data generator ([`simulator`]) plus the
//! slide tiling step that produces classifier inputs ([`patch`]).

#![no_std]

extern crate alloc;

pub mod curve;
pub mod error;
pub mod metrics;
pub mod patch;
pub mod selection;
pub mod simulator;
pub mod stats;
pub mod tensor;

pub use curve::CurveSeries;
pub use error::{Error, Result};
pub use metrics::{compute_all, compute_item, ItemUncertainty, Metric};
pub use selection::{ArqParams, SelectionOutcome};
pub use simulator::{simulate, SimConfig, Simulation};
pub use stats::{CorrelationReport, Statistic};
pub use tensor::{LabelSet, McSampleSet};
