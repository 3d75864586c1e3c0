//! Clipped-surrogate policy optimisation with generalised advantage
//! estimation, one independent learner per agent.

use lare_core::nn::AdamConfig;
use lare_core::Adam64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RlError};
use crate::policy::{log_softmax, PolicyNet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
    pub actor: AdamConfig,
    pub critic: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            epochs: 4,
            entropy_coef: 0.01,
            normalize_advantages: true,
            actor: AdamConfig::default(),
            critic: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RlError::Config(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(RlError::Config(format!("gae_lambda {} outside [0, 1]", self.gae_lambda)));
        }
        if !(self.clip >= 0.0) || !(self.entropy_coef >= 0.0) {
            return Err(RlError::Config("clip and entropy_coef must be non-negative".into()));
        }
        Ok(())
    }
}

/// One agent's view of one episode with rewards already relabelled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentEpisode {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub old_logp: Vec<f64>,
    pub rewards: Vec<f64>,
}

/// Advantages and value targets for an episode that terminates after its
/// last step.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_v = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * next_v - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
        next_v = values[t];
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// A policy with its two optimisers.
#[derive(Debug, Clone)]
pub struct AgentLearner {
    pub net: PolicyNet,
    actor_opt: Adam64,
    critic_opt: Adam64,
}

impl AgentLearner {
    pub fn new(net: PolicyNet, cfg: &PpoConfig) -> Self {
        Self {
            actor_opt: Adam64::new(net.actor.n_params(), cfg.actor),
            critic_opt: Adam64::new(net.critic.n_params(), cfg.critic),
            net,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    /// Surrogate loss (negated objective, entropy excluded) before the first
    /// epoch.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Euclidean norm of the actor gradient in each epoch.
    pub actor_grad_norms: Vec<f64>,
}

struct Sample<'a> {
    obs: &'a [f64],
    action: usize,
    old_logp: f64,
    adv: f64,
    target: f64,
}

/// Runs `cfg.epochs` full-batch epochs of the clipped surrogate objective
/// plus entropy bonus on the actor and squared error on the critic.
pub fn policy_update(learner: &mut AgentLearner, episodes: &[AgentEpisode], cfg: &PpoConfig) -> Result<UpdateStats> {
    let mut samples = Vec::new();
    for ep in episodes {
        let n = ep.obs.len();
        if ep.actions.len() != n || ep.old_logp.len() != n || ep.rewards.len() != n {
            return Err(RlError::Config("episode fields differ in length".into()));
        }
        let values = ep
            .obs
            .iter()
            .map(|o| learner.net.value(o))
            .collect::<Result<Vec<_>>>()?;
        let (adv, targets) = gae(&ep.rewards, &values, cfg.gamma, cfg.gae_lambda);
        for t in 0..n {
            samples.push(Sample {
                obs: &ep.obs[t],
                action: ep.actions[t],
                old_logp: ep.old_logp[t],
                adv: adv[t],
                target: targets[t],
            });
        }
    }
    if samples.is_empty() {
        return Ok(UpdateStats::default());
    }
    if samples.iter().any(|s| !s.adv.is_finite() || !s.target.is_finite()) {
        return Err(RlError::NonFinite("advantage".into()));
    }
    if cfg.normalize_advantages && samples.len() > 1 {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.adv).sum::<f64>() / n;
        let sd = (samples.iter().map(|s| (s.adv - mean).powi(2)).sum::<f64>() / n).sqrt();
        for s in &mut samples {
            s.adv -= mean;
            if sd > 1e-8 {
                s.adv /= sd;
            }
        }
    }
    let inv_n = 1.0 / samples.len() as f64;
    let mut stats = UpdateStats::default();
    for epoch in 0..cfg.epochs {
        let mut g_actor = learner.net.actor.zero_grads();
        let mut g_critic = learner.net.critic.zero_grads();
        let (mut pl, mut vl, mut ent) = (0.0, 0.0, 0.0);
        for s in &samples {
            let tape = learner.net.actor.forward_cached(s.obs)?;
            let lp = log_softmax(tape.output());
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            let h: f64 = -p.iter().zip(&lp).map(|(pi, li)| if *pi > 0.0 { pi * li } else { 0.0 }).sum::<f64>();
            let ratio = (lp[s.action] - s.old_logp).exp();
            let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
            let unclipped_active = ratio * s.adv <= clipped * s.adv;
            pl -= (ratio * s.adv).min(clipped * s.adv) * inv_n;
            ent += h * inv_n;
            // ∂loss/∂logits
            let mut d = vec![0.0; p.len()];
            if unclipped_active && s.adv != 0.0 {
                let c = -s.adv * ratio * inv_n;
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj += c * ((j == s.action) as u8 as f64 - p[j]);
                }
            }
            if cfg.entropy_coef > 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    // ∂H/∂z_j = −p_j (log p_j + H)
                    *dj += cfg.entropy_coef * inv_n * p[j] * (lp[j] + h);
                }
            }
            if d.iter().any(|v| *v != 0.0) {
                learner.net.actor.backward(&tape, &d, &mut g_actor);
            }
            let vt = learner.net.critic.forward_cached(s.obs)?;
            let e = vt.output()[0] - s.target;
            vl += e * e * inv_n;
            learner.net.critic.backward(&vt, &[2.0 * e * inv_n], &mut g_critic);
        }
        if !pl.is_finite() || !vl.is_finite() {
            return Err(RlError::NonFinite("policy loss".into()));
        }
        if epoch == 0 {
            stats.policy_loss = pl;
            stats.value_loss = vl;
            stats.entropy = ent;
        }
        stats
            .actor_grad_norms
            .push(g_actor.iter().map(|g| g * g).sum::<f64>().sqrt());
        if g_actor.iter().any(|g| *g != 0.0) {
            learner.actor_opt.step(learner.net.actor.params_mut(), &g_actor)?;
        }
        learner.critic_opt.step(learner.net.critic.params_mut(), &g_critic)?;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lare_core::SeededRng;

    fn learner(entropy: f64, clip: f64) -> (AgentLearner, PpoConfig) {
        let cfg = PpoConfig {
            entropy_coef: entropy,
            clip,
            normalize_advantages: false,
            actor: AdamConfig {
                lr: 1e-2,
                ..AdamConfig::default()
            },
            ..PpoConfig::default()
        };
        let net = PolicyNet::new(3, 4, &[8], &mut SeededRng::new(7)).unwrap();
        (AgentLearner::new(net, &cfg), cfg)
    }

    fn episode(l: &AgentLearner, obs: Vec<f64>, action: usize, rewards: Vec<f64>) -> AgentEpisode {
        let lp = log_softmax(&l.net.logits(&obs).unwrap())[action];
        let n = rewards.len();
        AgentEpisode {
            obs: vec![obs; n],
            actions: vec![action; n],
            old_logp: vec![lp; n],
            rewards,
        }
    }

    #[test]
    fn gae_by_hand() {
        // γ=0.5, λ=1: advantages are discounted returns minus values
        let (adv, tgt) = gae(&[1.0, 2.0], &[0.5, 0.25], 0.5, 1.0);
        assert_eq!(adv, vec![1.0 + 0.5 * 2.0 - 0.5, 2.0 - 0.25]);
        assert_eq!(tgt, vec![2.0, 2.0]);
        // λ=0: one-step TD errors
        let (adv, _) = gae(&[1.0, 2.0], &[0.5, 0.25], 0.5, 0.0);
        assert_eq!(adv, vec![1.0 + 0.5 * 0.25 - 0.5, 1.75]);
    }

    #[test]
    fn zero_advantage_without_entropy_leaves_actor() {
        let (mut l, cfg) = learner(0.0, 0.2);
        let before = l.net.actor.params().to_vec();
        // a single-step episode whose reward equals the critic's estimate
        let obs = vec![0.3, -0.2, 0.1];
        let v = l.net.value(&obs).unwrap();
        let ep = episode(&l, obs, 1, vec![v]);
        let stats = policy_update(&mut l, &[ep], &PpoConfig { epochs: 1, ..cfg }).unwrap();
        assert_eq!(stats.actor_grad_norms, vec![0.0]);
        assert_eq!(l.net.actor.params(), &before[..]);
    }

    #[test]
    fn positive_advantage_raises_probability() {
        let (mut l, cfg) = learner(0.0, 0.2);
        let obs = vec![1.0, 0.5, -0.5];
        let p0 = l.net.probs(&obs).unwrap()[2];
        let ep = episode(&l, obs.clone(), 2, vec![10.0]);
        policy_update(&mut l, &[ep], &PpoConfig { epochs: 1, ..cfg }).unwrap();
        assert!(l.net.probs(&obs).unwrap()[2] > p0);
    }

    #[test]
    fn zero_clip_stops_after_first_epoch() {
        let (mut l, cfg) = learner(0.0, 0.0);
        let ep = episode(&l, vec![1.0, 0.5, -0.5], 2, vec![10.0]);
        let stats = policy_update(&mut l, &[ep], &cfg).unwrap();
        assert_eq!(stats.actor_grad_norms.len(), 4);
        assert!(stats.actor_grad_norms[0] > 0.0);
        assert!(stats.actor_grad_norms[1..].iter().all(|g| *g == 0.0));
    }

    #[test]
    fn entropy_gradient_matches_finite_differences() {
        let (l, _) = learner(1.0, 0.2);
        let obs = [0.4, -0.1, 0.7];
        let ent = |net: &PolicyNet| {
            let lp = log_softmax(&net.logits(&obs).unwrap());
            -lp.iter().map(|x| x.exp() * x).sum::<f64>()
        };
        let tape = l.net.actor.forward_cached(&obs).unwrap();
        let lp = log_softmax(tape.output());
        let h = ent(&l.net);
        let d: Vec<f64> = lp.iter().map(|x| -x.exp() * (x + h)).collect();
        let mut g = l.net.actor.zero_grads();
        l.net.actor.backward(&tape, &d, &mut g);
        for i in [0, 5, g.len() - 1] {
            let mut a = l.net.clone();
            let mut b = l.net.clone();
            a.actor.params_mut()[i] += 1e-6;
            b.actor.params_mut()[i] -= 1e-6;
            let fd = (ent(&a) - ent(&b)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn bad_gamma_rejected() {
        assert!(PpoConfig {
            gamma: 1.0,
            ..PpoConfig::default()
        }
        .validate()
        .is_err());
    }
}
