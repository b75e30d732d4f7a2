use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("state has zero norm")]
    ZeroState,
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("instrument violates completeness (max-abs residual {0:e})")]
    InvalidInstrument(f64),
    #[error("local operators annihilate the state")]
    Annihilated,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
