use thiserror::Error;

/// Errors produced by the estimation pipeline.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// malformed input, not enough data to estimate, and numerical degeneracy.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry for `{id}`: {reason}")]
    Geometry { id: String, reason: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("undefined rescaling: {0}")]
    UndefinedRescaling(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    InsufficientData,
    Degenerate,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Geometry { .. } | Error::Input(_) | Error::Io { .. } | Error::Csv { .. } => {
                ErrorClass::Input
            }
            Error::InsufficientData(_) => ErrorClass::InsufficientData,
            Error::RankDeficient(_)
            | Error::UndefinedCorrelation(_)
            | Error::UndefinedRescaling(_) => ErrorClass::Degenerate,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub(crate) fn geometry(id: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Geometry {
            id: id.into(),
            reason: reason.into(),
        }
    }
}
