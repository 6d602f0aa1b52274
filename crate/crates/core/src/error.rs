use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Inputs violate a documented contract (shapes, ranges, ids, coverage).
    Validation,
    /// Files are missing, unreadable, or malformed.
    Data,
    /// Inputs were well formed but the computation cannot proceed.
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular mode: denominator 2*f1 - f0 - f2 is zero")]
    SingularMode,

    #[error("degenerate ROC: truth contains a single class")]
    DegenerateRoc,

    #[error("empty evaluation: no samples")]
    EmptyEvaluation,

    #[error("degenerate training: {0}")]
    DegenerateTraining(String),

    #[error("image format error: {0}")]
    Format(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("coverage error: {count} prediction(s) missing, e.g. {sample}")]
    Coverage { count: usize, sample: String },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Dimension(_)
            | Error::Pairing(_)
            | Error::Domain(_)
            | Error::InvalidLabel(_)
            | Error::Config(_)
            | Error::DuplicateId(_)
            | Error::Stratification(_)
            | Error::Coverage { .. } => ErrorCategory::Validation,
            Error::Format(_)
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::Image { .. }
            | Error::Serde(_) => ErrorCategory::Data,
            Error::SingularMode
            | Error::DegenerateRoc
            | Error::EmptyEvaluation
            | Error::DegenerateTraining(_) => ErrorCategory::Runtime,
            Error::Iteration { source, .. } => source.category(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}
