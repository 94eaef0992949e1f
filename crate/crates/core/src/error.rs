use std::path::PathBuf;

use iegan_imaging::ImagingError;
use iegan_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Imaging(#[from] ImagingError),

    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    #[error("malformed {what} at byte {offset}: {detail}")]
    Format { what: &'static str, offset: u64, detail: String },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid json in {what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing parameter {0}")]
    MissingParam(String),

    #[error("checkpoint was written for config {found}, current config is {expected}")]
    ConfigMismatch { expected: String, found: String },

    #[error("checkpoint task {checkpoint} does not match requested task {requested}")]
    TaskMismatch { checkpoint: String, requested: String },

    #[error("non-finite {what} at step {step}: {detail}")]
    NonFinite { what: &'static str, step: u64, detail: String },

    #[error("no usable images in {0}")]
    EmptyDataset(PathBuf),
}

impl CoreError {
    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        CoreError::Contract { op, detail: detail.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io { path: path.into(), source }
    }

    pub(crate) fn format(what: &'static str, offset: u64, detail: impl Into<String>) -> Self {
        CoreError::Format { what, offset, detail: detail.into() }
    }

    /// Contract-style failures (bad arguments, shapes, configs) as opposed to
    /// I/O or numeric ones.
    pub fn is_contract(&self) -> bool {
        match self {
            CoreError::Tensor(TensorError::NonFinite { .. }) => false,
            CoreError::Tensor(_) => true,
            CoreError::Imaging(e) => matches!(e, ImagingError::Contract { .. } | ImagingError::Dimension { .. }),
            CoreError::Contract { .. }
            | CoreError::MissingParam(_)
            | CoreError::ConfigMismatch { .. }
            | CoreError::TaskMismatch { .. } => true,
            _ => false,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, CoreError::NonFinite { .. } | CoreError::Tensor(TensorError::NonFinite { .. }))
    }
}
