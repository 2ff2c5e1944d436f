use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum WfemError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural argument (sizes, orders, indices) is invalid.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A sampled function returned a non-finite value.
    #[error("non-finite input: {0}")]
    Input(String),

    /// Adaptive integration ran out of its panel budget.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} ({context})")]
    Convergence { estimate: f64, error_bound: f64, context: String },

    /// Stiffness assembly failed for a specific element pair.
    #[error("assembly failed on element pair ({k}, {l}): {reason}")]
    Assembly { k: usize, l: usize, reason: String },

    /// Cholesky factorization broke down: the matrix is not SPD.
    #[error("factorization failed at pivot {pivot}: value {value:e}")]
    Factorization { pivot: usize, value: f64 },

    /// The energy identity returned a negative squared error beyond rounding.
    #[error("energy identity inconsistent: squared error {value:e}")]
    Inconsistent { value: f64 },

    /// An experiment breached its own acceptance bound.
    #[error("acceptance breach: {0}")]
    Acceptance(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, WfemError>;
