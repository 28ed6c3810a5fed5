use std::path::PathBuf;

use thiserror::Error;

use crate::cohort::CohortError;
use crate::metrics::MetricsError;
use crate::phantom::PhantomError;
use crate::repair::RepairError;
use crate::report::ReportError;
use crate::thickness::ThicknessError;
use crate::volume::VolumeError;

/// Any failure of a file-level operation, with a process exit code per source.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("Json: {path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("Manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Thickness(#[from] ThicknessError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Phantom(#[from] PhantomError),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Json { path: path.into(), message: err.to_string() }
    }

    /// Process exit code; 1 and 2 are left to generic and usage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Json { .. } => 4,
            Error::Manifest(_) => 5,
            Error::Volume(_) => 10,
            Error::Repair(_) => 20,
            Error::Thickness(_) => 30,
            Error::Metrics(_) => 40,
            Error::Phantom(_) => 50,
            Error::Cohort(_) => 60,
            Error::Report(_) => 70,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
