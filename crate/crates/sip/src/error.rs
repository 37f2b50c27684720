//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, analytic formulas, exact solves,
/// and simulation.
#[derive(Debug, Error)]
pub enum SipError {
    /// A parameter violated its domain (non-positive rate, N < 2, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A configuration does not match the model dimensions.
    #[error("dimension mismatch: configuration has {found} sites, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The closed-form denominator of a profile or coefficient formula
    /// vanished; the linear ansatz normalization fails for this parameter set.
    #[error("degenerate denominator in {context}: |{value:e}| below threshold")]
    DegenerateDenominator { context: &'static str, value: f64 },

    /// The requested truncated state space does not fit the index range
    /// or the configured size budget.
    #[error("truncated space too large: ({n_max} + 1)^{n_sites} exceeds {limit} states")]
    SpaceTooLarge {
        n_sites: usize,
        n_max: u32,
        limit: usize,
    },

    /// A Poisson-equation right-hand side failed the solvability condition.
    #[error("solvability violated: |<f>_nu| = {mean:e} exceeds tolerance {tol:e}")]
    SolvabilityViolated { mean: f64, tol: f64 },

    /// The linear solver did not reach the requested residual.
    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    /// Simulation inputs were rejected.
    #[error("invalid simulation setup: {0}")]
    InvalidSimulation(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SipError>;
