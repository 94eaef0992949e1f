//! Models, objectives, data handling and the training loop.
//!
//! Network tensors live in `[-1, 1]`; every loss maps its inputs to `[0, 1]`
//! before comparing them.

pub mod convert;
pub mod data;
pub mod edge;
mod error;
pub mod gradsuite;
pub mod losses;
pub mod models;
pub mod params;
pub mod tensorfile;
pub mod trainer;

pub use error::CoreError;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
