use thiserror::Error;

/// Errors raised by the numerical pipelines.
///
/// Variants are split by how the CLI reports them: validation problems
/// (bad input, contract violations) versus numeric guard violations
/// (range guards, overflow, solver failure).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sieve limit {0} is below 2; the prime table would be empty")]
    EmptyTable(u64),

    #[error("limit {requested} exceeds the configured bound {bound}")]
    Capacity { requested: u64, bound: u64 },

    #[error("additive function `{name}` takes value {value} at p = {prime}, outside [0, {bound}]")]
    ValueOutOfBounds {
        name: String,
        prime: u64,
        value: f64,
        bound: f64,
    },

    #[error("degenerate function: B^2 = 0 on the primes up to {0}")]
    Degenerate(u64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series is not invertible: linear coefficient is zero")]
    NonInvertible,

    #[error("series has nonzero constant term {0}; shift it before inverting")]
    ShiftedSeries(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("delta/B = {ratio} is outside the admissible range (max {max})")]
    Range { ratio: f64, max: f64 },

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("root finder did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual})")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("moment reconstruction failed: residual {residual} above {threshold}")]
    ReconstructionFailed { residual: f64, threshold: f64 },

    #[error("cache file error: {0}")]
    Cache(String),
}

impl Error {
    /// True for numeric-guard failures (range, overflow, convergence) as
    /// opposed to input validation problems.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::Range { .. }
                | Error::Overflow(_)
                | Error::NoConvergence { .. }
                | Error::ReconstructionFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
