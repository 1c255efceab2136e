use std::path::{Path, PathBuf};

use topicdistill_core::Error as CoreError;

/// Errors raised by IO, configuration and orchestration.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: unknown split {split:?}", path.display())]
    UnknownSplit { path: PathBuf, line: usize, split: String },
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("{0}")]
    Data(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<AppError>,
    },
}

pub type AppResult<T> = Result<T, AppError>;

/// Process exit status for each failure class.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERIC: i32 = 3;
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        AppError::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => exit::USAGE,
            AppError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::DegenerateTopic { .. } | CoreError::Divergence { .. } => {
                    exit::NUMERIC
                }
                CoreError::InvalidArgument(_) => exit::USAGE,
                _ => exit::DATA,
            },
            AppError::Stage { source, .. } => source.exit_code(),
            _ => exit::DATA,
        }
    }
}
