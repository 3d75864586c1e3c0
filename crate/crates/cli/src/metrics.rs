use anyhow::{bail, Result};
use lare_core::{ActionValue, SeededRng};
use lare_envs::{run_episode, ParticleEnv, ReturnMode};
use lare_llm::is_executable;
use lare_lrdsl::{LatentRewardProgram, Probe};
use serde::{Deserialize, Serialize};

pub use lare_decomp::reward_pred_error;

/// Sample correlation, with a flag for the degenerate case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Set when either series is constant; `r` is then 0.
    pub constant: bool,
}

pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        bail!("series lengths differ: {} vs {}", x.len(), y.len());
    }
    if x.len() < 2 {
        bail!("need at least two points, got {}", x.len());
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation { r: 0.0, constant: true });
    }
    Ok(Correlation {
        r: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        constant: false,
    })
}

/// `|corr|` of every observation entry and every latent factor with the
/// per-agent ground-truth reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub samples: usize,
    pub raw: Vec<f64>,
    pub latent: Vec<f64>,
    pub raw_mean: f64,
    pub latent_mean: f64,
    /// Dimensions whose series was constant (counted as 0).
    pub constant_dims: usize,
}

impl CorrelationReport {
    /// `corr (dims)` cells for raw states and latent factors.
    pub fn table_cells(&self) -> (String, String) {
        (
            format!("{:.2} ({})", self.raw_mean, self.raw.len()),
            format!("{:.2} ({})", self.latent_mean, self.latent.len()),
        )
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Collects at least `n_steps` environment steps under uniformly random
/// actions. Each step gives one sample per agent: its observation, its
/// latent factors and its reward.
pub fn correlation_report(
    env: &mut ParticleEnv,
    program: &LatentRewardProgram,
    n_steps: usize,
    rng: &mut SeededRng,
) -> Result<CorrelationReport> {
    let (d_obs, d_lat) = (env.obs_dim(), program.dim());
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); d_obs];
    let mut lat: Vec<Vec<f64>> = vec![Vec::new(); d_lat];
    let mut rew = Vec::new();
    let mut steps = 0;
    let na = env.n_actions();
    while steps < n_steps {
        let traj = run_episode(env, rng, ReturnMode::Sum, |obs, rng| {
            obs.iter().map(|_| ActionValue::DiscreteIndex(rng.index(na))).collect()
        })?;
        for step in traj.steps() {
            for ((o, a), r) in step.per_agent_obs.iter().zip(&step.per_agent_action).zip(&step.per_agent_gt_reward) {
                for (col, v) in raw.iter_mut().zip(o.as_slice()) {
                    col.push(*v);
                }
                for (col, v) in lat.iter_mut().zip(program.eval(o, a)?) {
                    col.push(v);
                }
                rew.push(*r);
            }
        }
        steps += traj.len();
    }
    let mut constant_dims = 0;
    let mut abs_corr = |cols: &[Vec<f64>]| -> Result<Vec<f64>> {
        cols.iter()
            .map(|c| {
                let k = pearson_corr(c, &rew)?;
                constant_dims += usize::from(k.constant);
                Ok(k.r.abs())
            })
            .collect()
    };
    let raw = abs_corr(&raw)?;
    let latent = abs_corr(&lat)?;
    Ok(CorrelationReport {
        samples: rew.len(),
        raw_mean: mean(&raw),
        latent_mean: mean(&latent),
        raw,
        latent,
        constant_dims,
    })
}

/// Fraction of programs that run cleanly on every probe; `None` entries
/// (derivations that produced nothing) count as failures.
pub fn execution_rate(programs: &[Option<LatentRewardProgram>], probes: &[Probe]) -> f64 {
    if programs.is_empty() {
        return 0.0;
    }
    let ok = programs
        .iter()
        .filter(|p| p.as_ref().is_some_and(|p| is_executable(p, probes)))
        .count();
    ok as f64 / programs.len() as f64
}
