use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, tolerance {tol:.3e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("XX^T = ZZ^T: the candidate point is a global minimum, not a spurious point")]
    NotSpurious,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid cone program: {0}")]
    InvalidProgram(String),

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
