use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("encoder does not match the environment: {0}")]
    Signature(String),
    #[error("{kind} requires {what}")]
    Missing { kind: &'static str, what: &'static str },
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Eval(#[from] lare_lrdsl::EvalError),
    #[error(transparent)]
    Core(#[from] lare_core::CoreError),
}

pub type Result<T, E = DecompError> = std::result::Result<T, E>;
