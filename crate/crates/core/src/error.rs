use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of supported range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("evaluation at a pole of the reflection denominator (n = {n}, beta = {beta:e} rad/m)")]
    Pole { n: i32, beta: f64 },
    #[error("no convergence: {what} (best estimate {estimate:e}, error {error:e})")]
    Convergence {
        what: String,
        estimate: f64,
        error: f64,
    },
    #[error("contour error: {0}")]
    Contour(String),
    #[error("pole search failed: {0}")]
    Diagnostics(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
