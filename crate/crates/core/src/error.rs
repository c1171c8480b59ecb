use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("kernel {kernel} produced a non-finite value for rows {row_a} and {row_b}")]
    NonFiniteKernel {
        kernel: &'static str,
        row_a: usize,
        row_b: usize,
    },

    #[error("instance too large: {rows} rows exceeds the cap of {cap}")]
    TooLarge { rows: usize, cap: usize },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("oracle found no feasible KKT point")]
    OracleInfeasible,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SvmError>;

impl SvmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SvmError::Io {
            path: path.into(),
            source,
        }
    }
}
