//! Policy learning from proxy rewards.
//!
//! Particle tasks use one clipped-surrogate learner per agent with a
//! categorical actor and a state-value critic. The tabular learner plans
//! exactly on the known transitions with rewards estimated from relabelled
//! rollouts, and backs the comparisons made on small MDPs.

pub mod error;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod tabular;
pub mod train;

pub use error::{Result, RlError};
pub use policy::{argmax, log_softmax, softmax, PolicyNet, PolicySet};
pub use ppo::{gae, policy_update, AgentEpisode, AgentLearner, PpoConfig, UpdateStats};
pub use rollout::{collect_trajectory, Rollout};
pub use tabular::{tabular_q_train, value_iteration, TabularSolution, MAX_TABULAR_PAIRS};
pub use train::{ground_truth_return, train, Method, RecordRow, TrainConfig, TrainingRecord, CSV_HEADER};
