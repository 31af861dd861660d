use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension pair (n={n}, k={k}): need integers with 2 <= 2k < n")]
    InvalidDimension { n: i64, k: i64 },
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("no exact representation: {0}")]
    NotExact(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
