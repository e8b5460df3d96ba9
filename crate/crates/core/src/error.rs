use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subdomain count {m} does not divide mesh resolution {n}")]
    Misaligned { n: usize, m: usize },

    #[error("mesh too coarse for the derivative basis: need n/m >= 2, got n={n}, m={m}")]
    TooCoarse { n: usize, m: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("operator symmetry violated: {0}")]
    SymmetryBug(String),

    #[error("dimension {dim} exceeds the dense eigensolver limit {limit}")]
    TooLargeForDense { dim: usize, limit: usize },

    #[error("convergence failure: {0}")]
    Divergence(String),

    #[error("no rows")]
    NoRows,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
