use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("basis is not unitary (max deviation {0:.3e})")]
    InvalidBasis(f64),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("matrix is not symmetric (max |m - m^T| = {0:.3e})")]
    NotSymmetric(f64),
    #[error("value outside its domain: {0}")]
    Domain(String),
    #[error("deviation state is parallel to the ideal state")]
    DegenerateDeviation,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
