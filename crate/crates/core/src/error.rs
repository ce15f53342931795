use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("residual statistic eta = {eta:e} is below the degenerate floor")]
    DegenerateEta { eta: f64 },

    #[error("all importance weights underflowed")]
    WeightsUnderflow,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("innovation covariance is not positive definite")]
    InnovationNotSpd,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
