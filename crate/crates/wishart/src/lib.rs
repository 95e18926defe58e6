//! Experiment runner for diffusing complex Wishart matrices.
//!
//! Wraps [`wishart_core`] with deterministic parallel Monte Carlo, a flat JSON
//! run configuration, CSV output and a hashed run manifest.  Every experiment
//! writes into `<outdir>/<experiment>/`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod parallel;
pub mod plot;

pub use config::{Experiment, RunConfig};
pub use experiments::{run, RunOptions, RunReport};
pub use output::{Bound, Check};

/// Failure of a run, as opposed to a failed tolerance check.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("numerical error: {0}")]
    Numeric(#[from] wishart_core::Error),
}
