use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix (condition number estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
