use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: repgap_core::Error,
    },

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use repgap_core::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Io { .. } => exit::IO,
            CliError::Core { source, .. } => match source {
                E::InvalidArgument(_)
                | E::DimensionMismatch { .. }
                | E::Unsupported(_)
                | E::Empty(_) => exit::CONFIG,
                E::Degenerate(_) | E::Numerical(_) => exit::NUMERICAL,
                E::Format(_) | E::Io(_) => exit::IO,
            },
        }
    }
}

/// Attaches experiment context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for repgap_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}

pub fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

/// Core errors from file access carry the path; IO failures keep exit code 4.
pub fn file_error(path: impl Into<PathBuf>) -> impl FnOnce(repgap_core::Error) -> CliError {
    let path = path.into();
    move |source| match source {
        repgap_core::Error::Io(source) => CliError::Io { path, source },
        other => CliError::Core {
            context: path.display().to_string(),
            source: other,
        },
    }
}
