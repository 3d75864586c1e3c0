use lare_core::CoreError;
use lare_decomp::DecompError;
use lare_envs::EnvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("training configuration: {0}")]
    Config(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, RlError>;
