//! Dense tanh networks with exact reverse-mode gradients and Adam.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use mlp::{mse_loss_grad, Init, Mlp, Tape};
