use std::path::PathBuf;

use lare_lrdsl::VerifyError;
use thiserror::Error;

use crate::pipeline::DerivationLog;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { attempts: usize, message: String },
    #[error("none of the {n} replies contained a program")]
    DegenerateBatch { n: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("fixture {}: {message}", path.display())]
    Fixture { path: PathBuf, message: String },
    #[error("no program passed verification after {rounds} round(s)")]
    DerivationFailed { rounds: usize, log: Box<DerivationLog> },
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

pub type Result<T> = std::result::Result<T, LlmError>;
