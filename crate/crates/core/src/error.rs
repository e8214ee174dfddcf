//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by matrix construction, balancing, and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of two arguments do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Origin and destination totals disagree.
    #[error("margins not self-consistent: sum(origins) = {origins} but sum(destinations) = {destinations}")]
    InconsistentMargins { origins: u64, destinations: u64 },

    /// No nonnegative table satisfies the constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative procedure did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A numeric argument violates its domain.
    #[error("invalid value: {0}")]
    InvalidValue(String),

    /// Requested mean cost cannot be produced by any deterrence parameter.
    #[error("target cost {target} outside attainable range ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },

    /// A cost does not fall in any configured bin.
    #[error("cost {cost} at cell ({row}, {col}) outside bin range ({lo}, {hi}]")]
    CostOutsideBins {
        cost: f64,
        row: usize,
        col: usize,
        lo: f64,
        hi: f64,
    },

    /// A bin holds no OD pairs but carries a nonzero exponent.
    #[error("bin {bin} contains no OD pairs but has nonzero exponent {exponent}")]
    EmptyBin { bin: usize, exponent: f64 },

    /// Enumeration would exceed the caller's cap.
    #[error("enumeration exceeded cap of {cap} tables")]
    CapExceeded { cap: usize },

    /// Not enough draws for the requested statistic.
    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
}
