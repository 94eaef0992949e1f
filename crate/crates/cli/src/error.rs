use std::path::PathBuf;

use iegan_core::CoreError;
use iegan_imaging::ImagingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Imaging(#[from] ImagingError),

    #[error("{0}")]
    Contract(String),

    #[error("{0}")]
    CheckFailed(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

/// Process exit status for a failed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Contract = 2,
    Io = 3,
    Numeric = 4,
}

impl HarnessError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            HarnessError::Core(e) => core_status(e),
            HarnessError::Imaging(e) => imaging_status(e),
            HarnessError::Contract(_) => ExitStatus::Contract,
            HarnessError::CheckFailed(_) => ExitStatus::Numeric,
            HarnessError::Io { .. } | HarnessError::Json { .. } => ExitStatus::Io,
        }
    }
}

fn core_status(e: &CoreError) -> ExitStatus {
    match e {
        e if e.is_numeric() => ExitStatus::Numeric,
        e if e.is_contract() => ExitStatus::Contract,
        CoreError::Imaging(i) => imaging_status(i),
        _ => ExitStatus::Io,
    }
}

fn imaging_status(e: &ImagingError) -> ExitStatus {
    match e {
        ImagingError::Contract { .. } | ImagingError::Dimension { .. } => ExitStatus::Contract,
        _ => ExitStatus::Io,
    }
}

/// Exit status for an error chain; anything unrecognized counts as I/O.
pub fn exit_status(err: &anyhow::Error) -> ExitStatus {
    for cause in err.chain() {
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            return h.exit_status();
        }
        if let Some(c) = cause.downcast_ref::<CoreError>() {
            return core_status(c);
        }
        if let Some(i) = cause.downcast_ref::<ImagingError>() {
            return imaging_status(i);
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return ExitStatus::Contract;
        }
    }
    ExitStatus::Io
}
