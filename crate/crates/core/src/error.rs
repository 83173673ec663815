use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("splitting error: {0}")]
    Splitting(String),
    #[error("estimator failure: {0}")]
    Estimator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
