//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("time order violated: t = {t} must not precede s = {s}")]
    TimeOrder { t: f64, s: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "{count} of {total} simulated paths left the finite range; \
         this diagnostic needs a fully finite ensemble"
    )]
    PathBlowUp { count: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("malformed ensemble dump: {0}")]
    Dump(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
