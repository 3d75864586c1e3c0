use std::fmt::Write as _;

use lare_core::{ReplayBuffer, SeededRng, Trajectory};
use lare_decomp::{reward_pred_error, DecompConfig, DecompKind, DecompTrainer};
use lare_envs::{ParticleEnv, ReturnMode};
use lare_lrdsl::LatentRewardProgram;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RlError};
use crate::policy::PolicySet;
use crate::ppo::{policy_update, AgentEpisode, AgentLearner, PpoConfig};
use crate::rollout::{collect_trajectory, Rollout};

/// Where the per-step training rewards come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Ground-truth per-step rewards.
    Dense,
    /// The return, split across agents, at the final step only.
    Episodic,
    RdRaw,
    Lare,
    Ircr,
    Rrd,
    RrdUnbiased,
    SignAgg,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Dense,
        Method::Episodic,
        Method::RdRaw,
        Method::Lare,
        Method::Ircr,
        Method::Rrd,
        Method::RrdUnbiased,
        Method::SignAgg,
    ];

    pub fn decomposition(&self) -> Option<DecompKind> {
        match self {
            Method::Dense | Method::Episodic => None,
            Method::RdRaw => Some(DecompKind::RdRaw),
            Method::Lare => Some(DecompKind::Lare),
            Method::Ircr => Some(DecompKind::Ircr),
            Method::Rrd => Some(DecompKind::Rrd),
            Method::RrdUnbiased => Some(DecompKind::RrdUnbiased),
            Method::SignAgg => Some(DecompKind::SignAgg),
        }
    }

    pub fn needs_encoder(&self) -> bool {
        self.decomposition().is_some_and(|k| k.needs_encoder())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Episodic => "episodic",
            Method::RdRaw => "rd-raw",
            Method::Lare => "lare",
            Method::Ircr => "ircr",
            Method::Rrd => "rrd",
            Method::RrdUnbiased => "rrd-unbiased",
            Method::SignAgg => "sign-agg",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub max_episodes: usize,
    #[serde(default)]
    pub decomp: DecompConfig,
    #[serde(default = "d::buffer")]
    pub buffer_capacity: usize,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default = "d::hidden")]
    pub policy_hidden: Vec<usize>,
    /// Episodes collected between policy updates.
    #[serde(default = "d::one")]
    pub episodes_per_update: usize,
    #[serde(default = "d::eval_interval")]
    pub eval_interval: usize,
    #[serde(default = "d::eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub return_mode: ReturnMode,
    #[serde(default)]
    pub seed: u64,
}

mod d {
    pub fn buffer() -> usize {
        1000
    }
    pub fn hidden() -> Vec<usize> {
        vec![64, 64]
    }
    pub fn one() -> usize {
        1
    }
    pub fn eval_interval() -> usize {
        100
    }
    pub fn eval_episodes() -> usize {
        10
    }
}

impl TrainConfig {
    pub fn new(method: Method, max_episodes: usize, seed: u64) -> Self {
        Self {
            method,
            max_episodes,
            decomp: DecompConfig::default(),
            buffer_capacity: d::buffer(),
            ppo: PpoConfig::default(),
            policy_hidden: d::hidden(),
            episodes_per_update: 1,
            eval_interval: d::eval_interval(),
            eval_episodes: d::eval_episodes(),
            return_mode: ReturnMode::Sum,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        if self.max_episodes == 0 {
            return Err(RlError::Config("max_episodes must be ≥ 1".into()));
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 || self.episodes_per_update == 0 {
            return Err(RlError::Config(
                "eval_interval, eval_episodes and episodes_per_update must be ≥ 1".into(),
            ));
        }
        if self.buffer_capacity == 0 || self.decomp.batch_size == 0 {
            return Err(RlError::Config("buffer and batch sizes must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub episode: usize,
    pub eval_return_mean: f64,
    pub eval_return_std: f64,
    /// Mean model loss over the updates since the previous row.
    pub decomp_loss: Option<f64>,
    /// Mean `|r̂ − r|` on the evaluation episodes.
    pub reward_pred_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub rows: Vec<RecordRow>,
    /// Reward-model update steps that ran (zero for parameter-free methods).
    #[serde(default)]
    pub model_updates: usize,
}

pub const CSV_HEADER: &str = "episode,eval_return_mean,eval_return_std,decomp_loss,reward_pred_error";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainingRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.episode,
                r.eval_return_mean,
                r.eval_return_std,
                opt(r.decomp_loss),
                opt(r.reward_pred_error)
            );
        }
        s
    }

    pub fn final_eval(&self) -> Option<f64> {
        self.rows.last().map(|r| r.eval_return_mean)
    }
}

/// Sum of ground-truth rewards over steps and agents.
pub fn ground_truth_return(traj: &Trajectory) -> f64 {
    traj.steps().iter().flat_map(|s| &s.per_agent_gt_reward).sum()
}

const INIT_STREAM: u64 = 1;
const COLLECT_STREAM: u64 = 2;
const MODEL_STREAM: u64 = 3;
const EVAL_STREAM: u64 = 4;

/// Greedy episodes from a fixed RNG stream, so every evaluation of a run
/// starts from the same states.
fn evaluate(
    env: &mut ParticleEnv,
    policy: &PolicySet,
    root: &SeededRng,
    cfg: &TrainConfig,
) -> Result<(f64, f64, Vec<Trajectory>)> {
    let mut rng = root.derive(EVAL_STREAM);
    let mut rets = Vec::with_capacity(cfg.eval_episodes);
    let mut trajs = Vec::with_capacity(cfg.eval_episodes);
    for _ in 0..cfg.eval_episodes {
        let r = collect_trajectory(env, policy, &mut rng, cfg.return_mode, true)?;
        rets.push(ground_truth_return(&r.traj));
        trajs.push(r.traj);
    }
    let n = rets.len() as f64;
    let mean = rets.iter().sum::<f64>() / n;
    let sd = (rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok((mean, sd, trajs))
}

fn relabel(method: Method, trainer: Option<&DecompTrainer>, r: &Rollout) -> Result<Vec<Vec<f64>>> {
    let traj = &r.traj;
    let n = traj.n_agents();
    Ok(match method {
        Method::Dense => traj.steps().iter().map(|s| s.per_agent_gt_reward.clone()).collect(),
        Method::Episodic => {
            let mut out = vec![vec![0.0; n]; traj.len()];
            let share = traj.episodic_return() / n as f64;
            out.last_mut().expect("non-empty episode").fill(share);
            out
        }
        _ => trainer.expect("decomposed methods have a trainer").model().proxy_rewards(&traj.view())?,
    })
}

/// Trains one policy per agent on `env`: each episode is collected, stored,
/// used to update the reward model, relabelled with the model's proxy
/// rewards and fed to the policy learners.
pub fn train(env: &mut ParticleEnv, cfg: &TrainConfig, encoder: Option<LatentRewardProgram>) -> Result<TrainingRecord> {
    cfg.validate()?;
    if cfg.method.needs_encoder() && encoder.is_none() {
        return Err(RlError::Config(format!("{} needs a latent reward program", cfg.method)));
    }
    let root = SeededRng::new(cfg.seed);
    let mut init_rng = root.derive(INIT_STREAM);
    let mut collect_rng = root.derive(COLLECT_STREAM);
    let mut model_rng = root.derive(MODEL_STREAM);

    let policy = PolicySet::new(env.n_agents(), env.obs_dim(), env.n_actions(), &cfg.policy_hidden, &mut init_rng)?;
    let mut learners: Vec<AgentLearner> = policy
        .agents
        .into_iter()
        .map(|n| AgentLearner::new(n, &cfg.ppo))
        .collect();
    let mut trainer = match cfg.method.decomposition() {
        Some(kind) => Some(DecompTrainer::new(
            kind,
            env.signature(),
            encoder,
            cfg.decomp.clone(),
            &mut init_rng,
        )?),
        None => None,
    };
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut record = TrainingRecord::default();
    let mut pending: Vec<Rollout> = Vec::new();
    let mut losses: Vec<f64> = Vec::new();
    let mut model_updates = 0;

    let snapshot = |learners: &[AgentLearner]| PolicySet {
        agents: learners.iter().map(|l| l.net.clone()).collect(),
    };
    let mut push_row = |episode: usize,
                        env: &mut ParticleEnv,
                        learners: &[AgentLearner],
                        trainer: Option<&DecompTrainer>,
                        losses: &mut Vec<f64>|
     -> Result<()> {
        let (mean, sd, trajs) = evaluate(env, &snapshot(learners), &root, cfg)?;
        let rpe = match trainer {
            Some(t) => Some(reward_pred_error(t.model(), &trajs)?),
            None => None,
        };
        let loss = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
        losses.clear();
        record.rows.push(RecordRow {
            episode,
            eval_return_mean: mean,
            eval_return_std: sd,
            decomp_loss: loss,
            reward_pred_error: rpe,
        });
        Ok(())
    };

    push_row(0, env, &learners, trainer.as_ref(), &mut losses)?;
    for episode in 1..=cfg.max_episodes {
        let behaviour = snapshot(&learners);
        let rollout = collect_trajectory(env, &behaviour, &mut collect_rng, cfg.return_mode, false)?;
        if let Some(t) = &mut trainer {
            t.observe(&rollout.traj)?;
            buffer.push(rollout.traj.clone());
            if let Some(l) = t.update(&buffer, &mut model_rng)? {
                model_updates += 1;
                if !l.is_finite() {
                    return Err(RlError::NonFinite(format!("reward model loss at episode {episode}")));
                }
                losses.push(l);
            }
        }
        pending.push(rollout);
        if pending.len() == cfg.episodes_per_update {
            let mut per_agent: Vec<Vec<AgentEpisode>> = vec![Vec::new(); learners.len()];
            for r in &pending {
                let rewards = relabel(cfg.method, trainer.as_ref(), r)?;
                for (a, eps) in per_agent.iter_mut().enumerate() {
                    eps.push(AgentEpisode {
                        obs: r.traj.steps().iter().map(|s| s.per_agent_obs[a].as_slice().to_vec()).collect(),
                        actions: r
                            .traj
                            .steps()
                            .iter()
                            .map(|s| s.per_agent_action[a].discrete().expect("discrete actions"))
                            .collect(),
                        old_logp: r.logp.iter().map(|l| l[a]).collect(),
                        rewards: rewards.iter().map(|row| row[a]).collect(),
                    });
                }
            }
            pending.clear();
            for (learner, eps) in learners.iter_mut().zip(&per_agent) {
                policy_update(learner, eps, &cfg.ppo)?;
            }
        }
        if episode % cfg.eval_interval == 0 || episode == cfg.max_episodes {
            push_row(episode, env, &learners, trainer.as_ref(), &mut losses)?;
        }
    }
    record.model_updates = model_updates;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            let j = serde_json::to_string(&m).unwrap();
            assert_eq!(j, format!("\"{}\"", m.name()));
            assert_eq!(serde_json::from_str::<Method>(&j).unwrap(), m);
        }
        assert!(serde_json::from_str::<Method>("\"vib\"").is_err());
    }

    #[test]
    fn csv_leaves_missing_values_empty() {
        let r = TrainingRecord {
            rows: vec![RecordRow {
                episode: 3,
                eval_return_mean: 1.5,
                eval_return_std: 0.0,
                decomp_loss: None,
                reward_pred_error: Some(0.25),
            }],
            model_updates: 0,
        };
        assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n3,1.5,0,,0.25\n"));
    }
}
