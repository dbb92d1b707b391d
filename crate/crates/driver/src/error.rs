use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(breathing::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, DriverError>;

impl DriverError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config { key: key.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for bad input, 3 when an engine fails, 1 for I/O trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } | Self::Csv { .. } => 1,
        }
    }
}

impl From<breathing::Error> for DriverError {
    fn from(e: breathing::Error) -> Self {
        use breathing::Error as E;
        match e {
            E::InvalidParameter { name, reason } => Self::Config { key: name.to_string(), reason },
            E::BasisTooLarge { .. } => Self::Config { key: "ed.n_orbitals".into(), reason: e.to_string() },
            other => Self::Numerical(other),
        }
    }
}
