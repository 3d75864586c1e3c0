use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}, column {col}: `{reference}` is out of range (length {len})")]
    IndexOutOfRange {
        line: usize,
        col: usize,
        reference: String,
        len: usize,
    },
    #[error("line {line}: expression nesting exceeds {max}")]
    TooDeep { line: usize, max: usize },
    #[error("program has {got} factors, allowed 1 to {max}")]
    FactorCount { got: usize, max: usize },
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::IndexOutOfRange { line, .. }
            | ParseError::TooDeep { line, .. } => Some(*line),
            ParseError::FactorCount { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("factor {factor}: {message}")]
    Domain { factor: usize, message: String },
    #[error("factor {factor}: non-finite value in `{expr}`")]
    NonFinite { factor: usize, expr: String },
    #[error("input mismatch: {0}")]
    Input(String),
}
