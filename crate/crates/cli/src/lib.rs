//! Library side of the `iegan` command-line tool: experiment configuration,
//! corpus preparation, evaluation against a baseline, single-image
//! enhancement, the loss/discriminator ablation grid and contact sheets.

pub mod ablate;
pub mod config;
pub mod corpus;
pub mod enhance;
mod error;
pub mod eval;
pub mod grid;

pub use error::{exit_status, ExitStatus, HarnessError};

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Worker count for evaluation, from `IEGAN_THREADS` when set.
pub fn eval_threads() -> Option<usize> {
    std::env::var("IEGAN_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}
