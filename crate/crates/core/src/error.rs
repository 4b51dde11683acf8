use thiserror::Error;

use crate::bicop::Family;

/// Errors raised by the modelling and optimization layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// A sample (or a column of one) has zero variance.
    #[error("degenerate sample{}", column.map(|c| format!(" in column {c}")).unwrap_or_default())]
    DegenerateSample { column: Option<usize> },

    #[error("kendall tau {tau} is incompatible with the {family:?} family")]
    IncompatibleTau { family: Family, tau: f64 },

    #[error("invalid {family:?} parameter: {detail}")]
    InvalidParameter { family: Family, detail: String },

    #[error("selecting a fraction {fraction} of {population} individuals keeps none")]
    EmptySelection { population: usize, fraction: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
