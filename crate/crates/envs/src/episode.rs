use lare_core::{ActionValue, Observation, ReturnKind, SeededRng, Step, Trajectory};
use serde::{Deserialize, Serialize};

use crate::env::ParticleEnv;
use crate::error::{EnvError, Result};

/// How an episode's rewards become its single return.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReturnMode {
    /// Sum over steps and agents.
    #[default]
    Sum,
    /// `1` if the final task metric exceeds `threshold`, else `0`.
    Sparse { threshold: f64 },
}

/// Turns a finished episode into a trajectory carrying only its return for
/// learning. `metric` is the final task metric, used by sparse mode.
pub fn episodic_wrap(steps: Vec<Step>, finished: bool, mode: ReturnMode, metric: f64) -> Result<Trajectory> {
    if !finished {
        return Err(EnvError::PrematureWrap);
    }
    Ok(match mode {
        ReturnMode::Sum => Trajectory::from_steps(steps)?,
        ReturnMode::Sparse { threshold } => {
            let r = if metric > threshold { 1.0 } else { 0.0 };
            Trajectory::with_return(steps, r, ReturnKind::Sparse)?
        }
    })
}

/// Rolls out one full episode with `policy(observations, rng) → actions`.
pub fn run_episode<F>(env: &mut ParticleEnv, rng: &mut SeededRng, mode: ReturnMode, mut policy: F) -> Result<Trajectory>
where
    F: FnMut(&[Observation], &mut SeededRng) -> Vec<ActionValue>,
{
    let mut obs = env.reset(rng)?;
    let mut steps = Vec::with_capacity(env.max_steps());
    loop {
        let actions = policy(&obs, rng);
        let out = env.step(&actions)?;
        steps.push(Step {
            per_agent_obs: obs,
            per_agent_action: actions,
            per_agent_gt_reward: out.rewards,
            timestep: steps.len(),
        });
        obs = out.obs;
        if out.done {
            break;
        }
    }
    let metric = env.metric().expect("environment was reset");
    episodic_wrap(steps, true, mode, metric)
}

/// Uniformly random discrete actions for every agent.
pub fn random_actions(n_agents: usize, n_actions: usize, rng: &mut SeededRng) -> Vec<ActionValue> {
    (0..n_agents)
        .map(|_| ActionValue::DiscreteIndex(rng.index(n_actions)))
        .collect()
}
