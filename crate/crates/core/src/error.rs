use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand is not finite at sample {index}")]
    NonFinite { index: u64 },

    #[error("quadrature did not reach rel_tol {rel_tol:e} (last change {achieved:e})")]
    NoConvergence { rel_tol: f64, achieved: f64 },

    #[error("dimension {n} exceeds the supported maximum {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("vectors are linearly dependent")]
    RankDeficient,

    #[error("total measure estimate is not positive")]
    DegenerateDenominator,

    #[error("|x|^{p} is not locally integrable in dimension {n}")]
    NonIntegrable { p: f64, n: usize },

    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
