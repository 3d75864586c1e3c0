use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ActionKind {
    /// `n` discrete actions. `act[0]` reads the index; `act_onehot[i]` its one-hot code.
    Discrete { n: usize },
    Continuous { dim: usize },
}

/// Shape of the observation and action a program may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSignature {
    pub obs_dim: usize,
    pub action: ActionKind,
}

impl EnvSignature {
    pub fn discrete(obs_dim: usize, n_actions: usize) -> Self {
        Self {
            obs_dim,
            action: ActionKind::Discrete { n: n_actions },
        }
    }

    pub fn continuous(obs_dim: usize, act_dim: usize) -> Self {
        Self {
            obs_dim,
            action: ActionKind::Continuous { dim: act_dim },
        }
    }

    /// Length of the `act` vector.
    pub fn act_dim(&self) -> usize {
        match self.action {
            ActionKind::Discrete { .. } => 1,
            ActionKind::Continuous { dim } => dim,
        }
    }

    /// Length of `act_onehot`, zero for continuous actions.
    pub fn onehot_dim(&self) -> usize {
        match self.action {
            ActionKind::Discrete { n } => n,
            ActionKind::Continuous { .. } => 0,
        }
    }
}
