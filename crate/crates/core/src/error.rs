use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("coordinate outside grid domain: {0}")]
    Domain(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("dense build too large: {0}")]
    Capacity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
