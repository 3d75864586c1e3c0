use std::fmt::Write as _;

use lare_core::SeededRng;
use lare_decomp::RidgeAccumulator;
use lare_envs::TabularInstance;
use serde::{Deserialize, Serialize};

use crate::bound::BoundParams;
use crate::error::{Result, TheoryError};
use crate::features::Featurization;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub params: BoundParams,
    /// Episodes per seed.
    pub episodes: usize,
    pub n_seeds: usize,
    #[serde(default = "latent")]
    pub featurization: Featurization,
}

fn latent() -> Featurization {
    Featurization::Latent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub seed: usize,
    pub k: usize,
    /// `‖r − r̂_k‖_{A_k}`
    pub norm: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub rows: Vec<ConcentrationRow>,
    /// Seeds on which the bound failed for at least one `k`.
    pub seeds_violated: usize,
    pub violation_rate: f64,
    /// Largest `norm / bound` seen.
    pub max_norm_ratio: f64,
    /// Latent radius over raw radius for `k = 1..=episodes`.
    pub radius_ratio: Vec<f64>,
}

pub const CONCENTRATION_CSV_HEADER: &str = "seed,k,norm,bound,violated";

impl ConcentrationResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CONCENTRATION_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.seed, r.k, r.norm, r.bound, u8::from(r.violated));
        }
        s
    }
}

/// Rolls uniformly random episodes, refits the ridge estimate after each one
/// and compares its weighted error against the confidence radius.
pub fn concentration_experiment(
    inst: &TabularInstance,
    cfg: &ConcentrationConfig,
    rng: &SeededRng,
) -> Result<ConcentrationResult> {
    cfg.params.validate()?;
    inst.validate()?;
    if cfg.n_seeds == 0 {
        return Err(TheoryError::Config("n_seeds must be ≥ 1".into()));
    }
    let feat = cfg.featurization;
    let dim = feat.dim(inst);
    let truth = feat.true_rewards(inst);
    let mut rows = Vec::with_capacity(cfg.n_seeds * cfg.episodes);
    let mut seeds_violated = 0;
    let mut max_norm_ratio = 0.0f64;
    for seed in 0..cfg.n_seeds {
        let mut rng = rng.derive(seed as u64);
        let mut acc = RidgeAccumulator::new(dim, cfg.params.lambda);
        let mut any = false;
        for k in 1..=cfg.episodes {
            let pairs = inst.rollout(&mut rng, |_, _, rng| rng.index(inst.n_actions));
            let ret = inst.noisy_return(&pairs, &mut rng);
            acc.push(&feat.counts(&pairs, inst), ret);
            let (r_hat, _) = acc.solve()?;
            let err: Vec<f64> = truth.iter().zip(&r_hat).map(|(r, e)| r - e).collect();
            let norm = acc.matrix().weighted_norm(&err);
            let bound = cfg.params.radius(k, inst.horizon, dim);
            let violated = norm > bound;
            any |= violated;
            max_norm_ratio = max_norm_ratio.max(norm / bound);
            rows.push(ConcentrationRow {
                seed,
                k,
                norm,
                bound,
                violated,
            });
        }
        seeds_violated += usize::from(any);
    }
    let radius_ratio = (1..=cfg.episodes)
        .map(|k| {
            cfg.params.radius(k, inst.horizon, inst.n_latent) / cfg.params.radius(k, inst.horizon, inst.n_pairs())
        })
        .collect();
    Ok(ConcentrationResult {
        rows,
        seeds_violated,
        violation_rate: seeds_violated as f64 / cfg.n_seeds as f64,
        max_norm_ratio,
        radius_ratio,
    })
}
