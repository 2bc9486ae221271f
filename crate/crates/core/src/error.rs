//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (non-finite
    /// argument, argument beyond the supported envelope).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter (node count, tolerance, interval bounds) is
    /// out of its accepted range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An interval union violates its own invariants (overlapping or
    /// unordered pieces).
    #[error("domain model error: {0}")]
    DomainModel(String),

    /// A self-refining computation failed to stabilize within its budget.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// A kernel sample came out non-finite during matrix assembly.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The discretized operator `Id - K` is singular to machine precision;
    /// the corresponding gap probability is numerically zero.
    #[error("degenerate determinant: {0}")]
    Degenerate(String),

    /// The resolvent `(Id - K)^{-1} K` cannot be formed reliably.
    #[error("resolvent error: {0}")]
    Resolvent(String),

    /// A determinant in a denominator is below the usable threshold.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Not enough usable data points for a fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the caller's arguments rather than by
    /// numerical behaviour at runtime.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parameter(_) | Error::DomainModel(_)
        )
    }
}
