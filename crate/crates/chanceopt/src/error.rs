use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("order error: {0}")]
    Order(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("resource guard: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
