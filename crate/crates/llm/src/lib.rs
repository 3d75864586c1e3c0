//! Deriving latent reward programs from a chat model.
//!
//! A derivation asks for several independent candidate programs, asks the
//! model to merge them into one, and then checks the merged program on a set
//! of probe inputs. A failing program is sent back with the error and the
//! failing input until one passes or the round budget is spent. Every
//! request and reply is kept in a [`DerivationLog`].

pub mod backend;
pub mod error;
pub mod extract;
pub mod pipeline;
pub mod prompt;

pub use backend::{
    request_hash, BackendKind, ChatBackend, HttpBackend, LlmBackendConfig, MockBackend, MockMode, API_KEY_VAR,
    BASE_URL_VAR,
};
pub use error::{LlmError, Result};
pub use extract::{extract_fields, Extracted};
pub use pipeline::{
    derive_latent_reward_fn, generate_candidates, is_executable, summarize_candidates, CandidateResponse,
    DerivationLog, DeriveOptions, Exchange, RoundLog,
};
pub use prompt::{build_prompt, Message, RoleTemplate, TaskSpec};
