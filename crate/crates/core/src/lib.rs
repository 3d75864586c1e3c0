//! Shared foundations for latent-reward credit assignment: trajectories and
//! replay, a platform-stable RNG, small dense linear algebra and a minimal
//! MLP with Adam.
//!
//! The numeric kernels ([`linalg`], [`nn`]) are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the precision used by the rest of
//! the workspace.

pub mod buffer;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod trajectory;

pub use buffer::ReplayBuffer;
pub use error::{CoreError, Result};
pub use rng::SeededRng;
pub use scalar::Scalar;
pub use trajectory::{
    read_jsonl, trajectory_return, write_jsonl, ActionValue, EpisodeView, Observation,
    ReturnKind, Step, Trajectory,
};

pub type Mlp64 = nn::Mlp<f64>;
pub type Mlp32 = nn::Mlp<f32>;
pub type Adam64 = nn::Adam<f64>;
pub type Adam32 = nn::Adam<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Cholesky64 = linalg::Cholesky<f64>;
