use lare_core::{ActionValue, Observation, SeededRng};
use lare_lrdsl::Probe;
use serde::{Deserialize, Serialize};

use crate::env::ParticleEnv;
use crate::episode::random_actions;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// State-action pairs taken from random-policy rollouts.
    #[serde(default = "default_rollout")]
    pub n_rollout: usize,
    /// Pairs with observations drawn uniformly within the observation bounds.
    #[serde(default = "default_uniform")]
    pub n_uniform: usize,
}

fn default_rollout() -> usize {
    256
}

fn default_uniform() -> usize {
    64
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            n_rollout: default_rollout(),
            n_uniform: default_uniform(),
        }
    }
}

/// Probe pairs for pre-verifying reward programs on `env`.
///
/// Rollout pairs cycle through agents and steps of consecutive random
/// episodes; uniform pairs use a uniformly random action.
pub fn probe_set(env: &mut ParticleEnv, cfg: ProbeConfig, rng: &mut SeededRng) -> Result<Vec<Probe>> {
    let mut out = Vec::with_capacity(cfg.n_rollout + cfg.n_uniform);
    let (n, na) = (env.n_agents(), env.n_actions());
    while out.len() < cfg.n_rollout {
        let mut obs = env.reset(rng)?;
        loop {
            let acts = random_actions(n, na, rng);
            for (o, a) in obs.iter().zip(&acts) {
                if out.len() < cfg.n_rollout {
                    out.push(Probe {
                        obs: o.clone(),
                        act: a.clone(),
                    });
                }
            }
            let step = env.step(&acts)?;
            obs = step.obs;
            if step.done || out.len() >= cfg.n_rollout {
                break;
            }
        }
    }
    let bounds = env.obs_bounds();
    for _ in 0..cfg.n_uniform {
        let o = bounds.iter().map(|&(lo, hi)| rng.uniform_range(lo, hi)).collect();
        out.push(Probe {
            obs: Observation::new(o),
            act: ActionValue::DiscreteIndex(rng.index(na)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ArenaConfig;

    #[test]
    fn default_probe_set() {
        let mut env = ParticleEnv::new(ArenaConfig::triangle_area()).unwrap();
        let p = probe_set(&mut env, ProbeConfig::default(), &mut SeededRng::new(0)).unwrap();
        assert_eq!(p.len(), 320);
        assert!(p.iter().all(|x| x.obs.len() == 14 && x.obs.is_finite()));
        let q = probe_set(&mut env, ProbeConfig::default(), &mut SeededRng::new(0)).unwrap();
        assert_eq!(p, q);
        let b = env.obs_bounds();
        for x in &p[256..] {
            for (v, (lo, hi)) in x.obs.as_slice().iter().zip(&b) {
                assert!(v >= lo && v <= hi);
            }
        }
    }
}
