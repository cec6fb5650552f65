use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or degenerate geometric input.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The caller combined arguments the operation does not accept.
    #[error("usage error: {0}")]
    Usage(String),

    /// A quantity overflowed the scalar range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A quadrature could not reach the requested accuracy.
    #[error("quadrature failed on {what}: error bound {bound:e} exceeds {tol:e}")]
    Quadrature { what: String, bound: f64, tol: f64 },

    /// The nonlinear solver stopped before reaching its tolerance.
    #[error("solver did not converge after {iterations} iterations (dual residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn geometry(msg: impl Into<String>) -> Error {
    Error::Geometry(msg.into())
}
