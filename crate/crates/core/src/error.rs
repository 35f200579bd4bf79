use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be positive (got {name} = 0)")]
    ZeroDimension { name: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("reduced vectors come from different projection matrices")]
    ProvenanceMismatch,

    #[error("sketches were built with different configurations or hash families")]
    ConfigMismatch,

    #[error("weight at index {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weighted norm is zero; quantity is undefined")]
    ZeroWeightedNorm,

    #[error("dimension {d} too large for exhaustive enumeration (max {max})")]
    EnumerationTooLarge { d: usize, max: usize },

    #[error("hash input {t} is outside the field of size {modulus}")]
    HashInputOutOfField { t: u64, modulus: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible sparse spec: {0}")]
    InfeasibleSpec(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("no data to process")]
    EmptyData,

    #[error("column `{0}` is missing or not numeric")]
    NonNumericColumn(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
