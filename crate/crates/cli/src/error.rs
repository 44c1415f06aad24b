use ghostsim_core::Error as CoreError;
use thiserror::Error;

/// Front-end failures, each with a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{failed} of {total} assertion(s) failed")]
    Assertions { failed: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::UndefinedModulation | CoreError::OffGrid(..) => 3,
                CoreError::Resource(_) => 4,
                CoreError::Config(_) | CoreError::Io(_) | CoreError::Format { .. } => 2,
            },
            CliError::Assertions { .. } => 1,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
