use thiserror::Error;

/// Errors raised by the renormalization toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("level mismatch: {0}")]
    Level(String),
    #[error("unsupported filter operation: {0}")]
    Filter(String),
    #[error("field is not real (largest imaginary part {0:e})")]
    NotReal(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
