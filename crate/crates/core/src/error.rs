use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (shape mismatch, broken invariant).
    #[error("validation error: {0}")]
    Validation(String),

    /// Iterative solver failed to reach its tolerance.
    #[error("convergence failure after {iterations} iterations (residual {residual:.3e})")]
    Convergence { residual: f64, iterations: usize },

    /// A computation would exceed a hard size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Grid too coarse to resolve a scaled kernel.
    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
