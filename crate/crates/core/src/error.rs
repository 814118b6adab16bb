use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("null space dimension {found} is below the required {required} after {attempts} attempts; reduce r")]
    Dimension {
        found: usize,
        required: usize,
        attempts: usize,
    },
    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("could not draw {wanted} distinct {bits}-bit messages")]
    DuplicateCollision { wanted: usize, bits: usize },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid attack spec: {0}")]
    InvalidSpec(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Length { expected, actual })
    }
}
