//! File formats, reports and the command line for `abstain-core`.

pub mod cli;
pub mod error;
pub mod image;
pub mod json;
pub mod mcs;
pub mod report;

pub use error::{Error, Result};
