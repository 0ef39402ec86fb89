use std::path::PathBuf;
use thiserror::Error;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Io = 1,
    Validation = 2,
    Degenerate = 3,
    Guard = 4,
    Invariant = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Core(#[from] compadv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        use compadv::Error as E;
        match self {
            CliError::Validation(_) => ExitCode::Validation,
            CliError::Io { .. } => ExitCode::Io,
            CliError::Invariant(_) => ExitCode::Invariant,
            CliError::Core(e) => match e {
                E::DegenerateBlock { .. } | E::DegenerateRatio { .. } => ExitCode::Degenerate,
                E::GuardRefused { .. } => ExitCode::Guard,
                E::Io(_) => ExitCode::Io,
                E::UnknownUser(_) | E::SplitMismatch { .. } => ExitCode::Invariant,
                _ => ExitCode::Validation,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
