#[derive(Debug, thiserror::Error)]
pub enum TheoryError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] lare_envs::EnvError),
    #[error(transparent)]
    Decomp(#[from] lare_decomp::DecompError),
    #[error(transparent)]
    Core(#[from] lare_core::CoreError),
}

pub type Result<T, E = TheoryError> = std::result::Result<T, E>;
