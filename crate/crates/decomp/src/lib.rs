//! Reward redistribution: models that turn an episodic return into per-step,
//! per-agent proxy rewards.
//!
//! Learned models regress the return on the sum of their per-step outputs,
//! either over the whole episode or over a random subsequence scaled up to the
//! episode length. Latent-reward models read only the values of a reward
//! program, so observation entries the program ignores cannot affect them.

pub mod error;
pub mod loss;
pub mod ls;
pub mod model;
pub mod signs;
pub mod trainer;

pub use error::{DecompError, Result};
pub use loss::{rd_objective, sample_subset, subset_objective};
pub use ls::{closed_form_ls, LsSolution, RidgeAccumulator};
pub use model::{agent_average_ablation, reward_pred_error, DecompKind, DecompositionModel, ProxyRewards};
pub use signs::{episode_latent_sum, fit_signs, SignStats, EXHAUSTIVE_MAX_DIM};
pub use trainer::{DecompConfig, DecompTrainer};
