use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel index triple {0:?}: indices must be strictly increasing within 0..=8")]
    InvalidKernel([usize; 3]),

    #[error("series length {0} is unsupported: MiniRocket needs at least 9 values")]
    UnsupportedLength(usize),

    #[error("dilation {dilation} is too large for series of length {length} (need 8 * dilation <= length - 1)")]
    DilationTooLarge { dilation: usize, length: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("series length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parameter layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training set has {found} examples but logistic regression needs more than {validation_size} (use ridge instead)")]
    TrainingSetTooSmall { found: usize, validation_size: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
