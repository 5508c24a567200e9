use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, mapped onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stacked matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Shape(_)
            | Error::NonFinite(_)
            | Error::NotSymmetric(_)
            | Error::Degenerate(_)
            | Error::EmptySelection(_)
            | Error::Io(_)
            | Error::Csv(_) => ErrorClass::Data,
            Error::RankDeficient { .. } | Error::Numerical(_) => ErrorClass::Numerical,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}
