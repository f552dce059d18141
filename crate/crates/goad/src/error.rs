use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// `row` and `column` are 1-based and count the header line, so they match
    /// what an editor shows.
    #[error("{}: row {row}, column {column} (`{name}`): {message}", path.display())]
    Parse {
        path: PathBuf,
        row: u64,
        column: usize,
        name: String,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}: not a valid {what}: {message}", path.display())]
    Format {
        path: PathBuf,
        what: &'static str,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] goad_core::Error),
}

pub type Result<T> = std::result::Result<T, GoadError>;

impl GoadError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GoadError::Io {
            path: path.into(),
            source,
        }
    }
}
