use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not place {what} without overlap after {attempts} attempts")]
    Placement { what: String, attempts: usize },
    #[error("agent {agent}: invalid action {action}")]
    InvalidAction { agent: usize, action: String },
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("step called on a finished episode or before reset")]
    NotRunning,
    #[error("episode wrapped before it finished")]
    PrematureWrap,
    #[error(transparent)]
    Core(#[from] lare_core::CoreError),
}

pub type Result<T, E = EnvError> = std::result::Result<T, E>;
