use std::path::PathBuf;

use adl_core::AdlError;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}:{row}: column `{column}`: {message}")]
    Schema { path: PathBuf, row: u64, column: String, message: String },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Model { context: String, source: AdlError },

    #[error("invariant violated: {0}")]
    Internal(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn model(context: impl Into<String>, source: AdlError) -> Self {
        LabError::Model { context: context.into(), source }
    }

    /// Process exit status: 2 for broken invariants, 1 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Internal(_) => 2,
            LabError::Model { source, .. } if source.is_internal() => 2,
            _ => 1,
        }
    }
}

impl From<AdlError> for LabError {
    fn from(source: AdlError) -> Self {
        LabError::Model { context: String::from("model"), source }
    }
}
