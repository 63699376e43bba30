use thiserror::Error;

/// Errors raised by the optimization library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero matrix has no reduced SVD")]
    ZeroMatrix,

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("data length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("empty vector")]
    EmptyVector,

    #[error("parameter list has {found} entries, norm spec expects {expected}")]
    Misaligned { expected: usize, found: usize },

    #[error("iterate is infeasible: composite norm {norm} exceeds 1")]
    Infeasible { norm: f64 },

    #[error("{name} = {value} is out of range ({range})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("numerical failure at step {step}: {what}")]
    Numerical { step: usize, what: String },

    #[error("{0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
