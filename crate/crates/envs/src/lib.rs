//! Episodic particle tasks with per-agent ground-truth rewards, and small
//! tabular MDPs with latent reward bins.

pub mod config;
pub mod env;
pub mod episode;
pub mod error;
pub mod particle;
pub mod probes;
pub mod tabular;

pub use config::{ArenaConfig, EnvKind};
pub use env::{ParticleEnv, StepOutcome, TaskText};
pub use episode::{episodic_wrap, random_actions, run_episode, ReturnMode};
pub use error::{EnvError, Result};
pub use particle::{ground_truth_reward, shoelace_area, task_metric, WorldState, N_ACTIONS};
pub use probes::{probe_set, ProbeConfig};
pub use tabular::{TabularInstance, TabularPolicy};
