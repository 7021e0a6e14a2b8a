use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input {role}: {}", path.display())]
    MissingInput { role: String, path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: metaeng::Error },

    #[error("invalid study config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("refusing to overwrite input {}", .0.display())]
    WouldOverwriteInput(PathBuf),

    #[error("embeddings {} do not match the hash recorded in the model", .0.display())]
    EmbeddingHash(PathBuf),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] metaeng::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, source: metaeng::Error) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingInput { .. } => "missing_input",
            CliError::Io { .. } => "io",
            CliError::Input { .. } => "invalid_input",
            CliError::Config { .. } => "invalid_config",
            CliError::WouldOverwriteInput(_) => "would_overwrite_input",
            CliError::EmbeddingHash(_) => "embedding_hash_mismatch",
            CliError::Usage(_) => "usage",
            CliError::Core(_) => "pipeline",
            CliError::Json(_) => "json",
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            CliError::MissingInput { path, .. }
            | CliError::Io { path, .. }
            | CliError::Input { path, .. }
            | CliError::Config { path, .. }
            | CliError::WouldOverwriteInput(path)
            | CliError::EmbeddingHash(path) => Some(path),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
