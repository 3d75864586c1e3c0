use lare_core::nn::Init;
use lare_core::{Mlp64, SeededRng};

use crate::error::{Result, RlError};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// First index of the largest entry.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Categorical actor and state-value critic for one agent.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub actor: Mlp64,
    pub critic: Mlp64,
}

impl PolicyNet {
    /// The actor's output layer starts small so the initial policy is close
    /// to uniform.
    pub fn new(obs_dim: usize, n_actions: usize, hidden: &[usize], rng: &mut SeededRng) -> Result<Self> {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = Mlp64::new(
            &sizes(n_actions),
            Init::UniformFanIn {
                c: 1.0,
                output_scale: 0.01,
            },
            rng,
        )?;
        let critic = Mlp64::new(&sizes(1), Init::default(), rng)?;
        Ok(Self { actor, critic })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let z = self.actor.forward(obs)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(RlError::NonFinite("policy logits".into()));
        }
        Ok(z)
    }

    pub fn probs(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(obs)?))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(obs)?[0])
    }

    /// Samples an action, returning it with its log-probability.
    pub fn sample(&self, obs: &[f64], rng: &mut SeededRng) -> Result<(usize, f64)> {
        let lp = log_softmax(&self.logits(obs)?);
        let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let a = rng.categorical(&p);
        Ok((a, lp[a]))
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(obs)?))
    }
}

/// Independent per-agent policies.
#[derive(Debug, Clone)]
pub struct PolicySet {
    pub agents: Vec<PolicyNet>,
}

impl PolicySet {
    pub fn new(n_agents: usize, obs_dim: usize, n_actions: usize, hidden: &[usize], rng: &mut SeededRng) -> Result<Self> {
        if n_agents == 0 {
            return Err(RlError::Config("no agents".into()));
        }
        let agents = (0..n_agents)
            .map(|_| PolicyNet::new(obs_dim, n_actions, hidden, rng))
            .collect::<Result<_>>()?;
        Ok(Self { agents })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }
}
