use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("decomposition failed: {0}")]
    Decompose(String),
    #[error("noise injection failed: {0}")]
    Noise(String),
    #[error("query generation failed: {0}")]
    Generate(String),
    #[error("unsupported query: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("comparison failed: {0}")]
    Compare(String),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("index error: {0}")]
    Index(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
