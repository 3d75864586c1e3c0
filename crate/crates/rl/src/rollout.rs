use lare_core::{ActionValue, Observation, SeededRng, Trajectory};
use lare_envs::{run_episode, ParticleEnv, ReturnMode};

use crate::error::{Result, RlError};
use crate::policy::PolicySet;

/// A collected episode with the behaviour log-probabilities, `[t][agent]`.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub traj: Trajectory,
    pub logp: Vec<Vec<f64>>,
}

/// Runs one episode. Actions are sampled from the policies, or chosen by
/// argmax when `greedy` is set (the log-probabilities are then those of the
/// chosen actions under the same policies).
pub fn collect_trajectory(
    env: &mut ParticleEnv,
    policy: &PolicySet,
    rng: &mut SeededRng,
    mode: ReturnMode,
    greedy: bool,
) -> Result<Rollout> {
    if policy.n_agents() != env.n_agents() {
        return Err(RlError::Config(format!(
            "{} policies for {} agents",
            policy.n_agents(),
            env.n_agents()
        )));
    }
    if policy.agents.iter().any(|p| p.obs_dim() != env.obs_dim() || p.n_actions() != env.n_actions()) {
        return Err(RlError::Config("policy shape does not match the environment".into()));
    }
    let mut logp: Vec<Vec<f64>> = Vec::with_capacity(env.max_steps());
    let mut failure: Option<RlError> = None;
    let traj = run_episode(env, rng, mode, |obs: &[Observation], rng| {
        let mut acts = Vec::with_capacity(obs.len());
        let mut lps = Vec::with_capacity(obs.len());
        for (net, o) in policy.agents.iter().zip(obs) {
            let r = if greedy {
                net.logits(o.as_slice()).map(|z| {
                    let a = crate::policy::argmax(&z);
                    (a, crate::policy::log_softmax(&z)[a])
                })
            } else {
                net.sample(o.as_slice(), rng)
            };
            let (a, lp) = r.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                (0, 0.0)
            });
            acts.push(ActionValue::DiscreteIndex(a));
            lps.push(lp);
        }
        logp.push(lps);
        acts
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Rollout { traj, logp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lare_envs::ArenaConfig;

    fn setup(max_steps: usize) -> (ParticleEnv, PolicySet) {
        let mut cfg = ArenaConfig::triangle_area();
        cfg.max_steps = max_steps;
        let env = ParticleEnv::new(cfg).unwrap();
        let p = PolicySet::new(env.n_agents(), env.obs_dim(), env.n_actions(), &[8], &mut SeededRng::new(1)).unwrap();
        (env, p)
    }

    #[test]
    fn reproducible_with_seed() {
        let (mut env, p) = setup(25);
        let a = collect_trajectory(&mut env, &p, &mut SeededRng::new(4), ReturnMode::Sum, false).unwrap();
        let b = collect_trajectory(&mut env, &p, &mut SeededRng::new(4), ReturnMode::Sum, false).unwrap();
        assert_eq!(a.traj, b.traj);
        assert_eq!(a.logp, b.logp);
        assert_eq!(a.traj.len(), 25);
    }

    #[test]
    fn horizon_one() {
        let (mut env, p) = setup(1);
        let r = collect_trajectory(&mut env, &p, &mut SeededRng::new(0), ReturnMode::Sum, false).unwrap();
        assert_eq!(r.traj.len(), 1);
    }

    #[test]
    fn greedy_actions_are_argmax() {
        let (mut env, p) = setup(10);
        let r = collect_trajectory(&mut env, &p, &mut SeededRng::new(0), ReturnMode::Sum, true).unwrap();
        for step in r.traj.steps() {
            for (net, (o, a)) in p.agents.iter().zip(step.per_agent_obs.iter().zip(&step.per_agent_action)) {
                assert_eq!(a.discrete(), Some(net.greedy(o.as_slice()).unwrap()));
            }
        }
    }
}
