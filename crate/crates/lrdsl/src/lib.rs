//! A small expression language for latent reward programs.
//!
//! A program is a list of factor expressions, one per line, each mapping a
//! state-action pair to a real number. Index references are checked against
//! an [`EnvSignature`] when parsing, and evaluation reports domain errors
//! (division by zero, `log` of a non-positive value, `sqrt` of a negative
//! value) instead of clamping them.
//!
//! ```text
//! program  = { line } ;
//! line     = [ expr ] [ "#" comment ] newline ;
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | primary ;
//! primary  = number | ref | call | "(" expr ")" ;
//! ref      = source "[" int "]" ;
//! slice    = source "[" int ".." int "]" ;
//! source   = "obs" | "act" | "act_onehot" ;
//! call     = name "(" [ arg { "," arg } ] ")" ;
//! arg      = slice | expr ;
//! name     = "abs" | "sqrt" | "exp" | "log" | "tanh" | "sign" | "clip"
//!          | "min" | "max" | "sum" | "mean" | "norm1" | "norm2" | "dot" ;
//! ```
//!
//! `×`, `÷` and `−` are accepted as operator spellings. Slices are half-open.
//! `min`, `max`, `sum`, `mean`, `norm1` and `norm2` take any mix of scalars
//! and slices; `dot` takes two slices of equal length; `clip(x, lo, hi)`.

pub mod ast;
pub mod error;
pub mod eval;
mod lexer;
pub mod parser;
pub mod signature;
pub mod verify;

pub use ast::{Arg, BinOp, Expr, Func, SliceRef, Source};
pub use error::{EvalError, ParseError};
pub use eval::{eval_expr, eval_program, EvalInput};
pub use parser::{parse_factor, parse_program, LatentRewardProgram, MAX_DEPTH, MAX_FACTORS};
pub use signature::{ActionKind, EnvSignature};
pub use verify::{pre_verify, verify_source, Probe, VerificationReport, VerifyError, VerifyErrorKind};
