//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by problem construction, inner solvers, and the main loop.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A non-finite value (NaN or infinity) was produced or supplied.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// A vector had the wrong length for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A scalar parameter was out of its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// One of the named inequalities tying the tolerance schedule together
    /// failed; `lhs <= rhs` was required.
    #[error("parameter inequality `{name}` violated: lhs {lhs:.6e} > rhs {rhs:.6e}")]
    ParameterInequality { name: &'static str, lhs: f64, rhs: f64 },

    /// A requested tolerance implies a certificate threshold below what f64
    /// arithmetic can measure on this problem's value/gradient scale.
    #[error(
        "tolerance not certifiable in f64 for {context}: threshold {threshold:.3e} \
         is below the noise floor {floor:.3e}"
    )]
    UncertifiableTolerance {
        context: &'static str,
        threshold: f64,
        floor: f64,
    },

    /// An iterative solver exhausted its certified iteration budget without
    /// reaching its goal.
    #[error("solver stalled in {context}: {iterations} iterations, residual {residual:.6e}")]
    SolverStall {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A condition the method guarantees by construction failed at runtime;
    /// indicates a bug or an out-of-contract problem instance.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// The requested instance parameters produce a degenerate instance.
    #[error("instance too small: {0}")]
    InstanceTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;
