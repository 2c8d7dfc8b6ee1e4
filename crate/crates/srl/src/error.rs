use std::io;
use std::path::{Path, PathBuf};

use srl_core::corpus::ParseError;
use srl_core::embedder::CacheError;
use srl_core::evaluator::AlignmentError;
use srl_core::model::ModelError;
use srl_core::trainer::TrainError;

use crate::checkpoint::CheckpointError;

/// Process exit status of the command-line tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Cache { path: PathBuf, source: CacheError },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{path}: invalid configuration: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0} invalid sentence(s)")]
    Invalid(usize),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("gradient check failed: max relative error {error:.3e} exceeds {tolerance:.1e} at {worst}")]
    GradCheck { error: f64, tolerance: f64, worst: String },
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Usage(_) | Error::Config { .. } => ExitCode::Usage,
            Error::Train(TrainError::NonFiniteLoss { .. }) | Error::GradCheck { .. } => ExitCode::Numerical,
            Error::Train(TrainError::Config(_) | TrainError::UnresolvedPrefix(_)) => ExitCode::Usage,
            Error::Model(ModelError::Config(_)) => ExitCode::Usage,
            _ => ExitCode::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
