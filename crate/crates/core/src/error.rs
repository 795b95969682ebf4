use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The kernel's singularity is too strong for the requested evaluation.
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Evaluation at a point outside the kernel's domain (e.g. t = 0 for a singular kernel).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("problem too large: {0}")]
    Sizing(String),

    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {k} (delta = {delta}): {source}")]
    Row {
        k: usize,
        delta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
