use thiserror::Error;

/// Errors raised by table construction, interaction computation and fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cut point {cut} out of range: must satisfy 1 <= cut <= {max}")]
    CutOutOfRange { cut: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The inverse link was evaluated outside its domain. Optimizers react by
    /// shortening the step rather than aborting.
    #[error("inverse link argument {arg} outside domain for lambda = {lambda}")]
    LinkDomain { arg: f64, lambda: f64 },

    #[error("pivot {value:e} below tolerance {tol:e} at deflation stage {stage}")]
    Pivot { stage: usize, value: f64, tol: f64 },

    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("undefined correlation: {0}")]
    Degenerate(String),

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
