use thiserror::Error;

/// Errors raised anywhere in the inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("degenerate electrode configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("MINRES breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!("{what}: expected {expected}, got {got}")));
    }
    Ok(())
}
