use std::fmt::Write as _;

use lare_core::linalg::dot;
use lare_core::SeededRng;
use lare_decomp::RidgeAccumulator;
use lare_envs::TabularInstance;
use serde::{Deserialize, Serialize};

use crate::bound::BoundParams;
use crate::error::{Result, TheoryError};
use crate::features::Featurization;

/// Cumulative regret after each episode of one optimistic run.
///
/// Every episode picks the enumerated policy with the largest
/// `h_πᵀ r̂ + l·‖h_π‖_{A⁻¹}`, where `h_π` is its exact expected visit-count
/// vector, then rolls it once and refits. Regret is measured with exact
/// policy values.
pub fn optimistic_regret(
    inst: &TabularInstance,
    params: &BoundParams,
    episodes: usize,
    feat: Featurization,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    params.validate()?;
    inst.validate()?;
    let policies = inst.policies()?;
    let dim = feat.dim(inst);
    let expected: Vec<Vec<f64>> = policies.iter().map(|p| feat.expected(p, inst)).collect();
    let values: Vec<f64> = policies.iter().map(|p| inst.policy_value(p)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut acc = RidgeAccumulator::new(dim, params.lambda);
    let mut curve = Vec::with_capacity(episodes);
    let mut total = 0.0;
    for k in 1..=episodes {
        let (r_hat, chol) = acc.solve()?;
        let l = params.radius(k - 1, inst.horizon, dim);
        let mut pick = (0, f64::NEG_INFINITY);
        for (i, h) in expected.iter().enumerate() {
            let score = dot(h, &r_hat) + l * chol.inverse_norm(h);
            if score > pick.1 {
                pick = (i, score);
            }
        }
        let policy = &policies[pick.0];
        let pairs = inst.rollout(rng, |_, s, _| policy[s]);
        let ret = inst.noisy_return(&pairs, rng);
        acc.push(&feat.counts(&pairs, inst), ret);
        total += best - values[pick.0];
        curve.push(total);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretResult {
    pub featurization: Featurization,
    /// `curves[seed][k − 1]`
    pub curves: Vec<Vec<f64>>,
}

pub const REGRET_CSV_HEADER: &str = "seed,k,regret";

impl RegretResult {
    pub fn mean_curve(&self) -> Vec<f64> {
        let n = self.curves.len() as f64;
        let len = self.curves.first().map_or(0, Vec::len);
        (0..len).map(|k| self.curves.iter().map(|c| c[k]).sum::<f64>() / n).collect()
    }

    /// Mean cumulative regret after the last episode.
    pub fn mean_final(&self) -> f64 {
        self.mean_curve().last().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(REGRET_CSV_HEADER);
        s.push('\n');
        for (seed, c) in self.curves.iter().enumerate() {
            for (i, r) in c.iter().enumerate() {
                let _ = writeln!(s, "{seed},{},{r}", i + 1);
            }
        }
        s
    }
}

/// Runs [`optimistic_regret`] on `n_seeds` streams derived from `rng`.
/// Seed `i` uses the same stream for every featurization, so runs pair up.
pub fn optimistic_regret_experiment(
    inst: &TabularInstance,
    params: &BoundParams,
    episodes: usize,
    feat: Featurization,
    n_seeds: usize,
    rng: &SeededRng,
) -> Result<RegretResult> {
    if n_seeds == 0 {
        return Err(TheoryError::Config("n_seeds must be ≥ 1".into()));
    }
    let curves = (0..n_seeds)
        .map(|seed| optimistic_regret(inst, params, episodes, feat, &mut rng.derive(seed as u64)))
        .collect::<Result<_>>()?;
    Ok(RegretResult {
        featurization: feat,
        curves,
    })
}

/// Slope of `log y` against `log k` over `k ∈ [from, to]` (1-based), by
/// least squares. Points with `y ≤ 0` are skipped; with fewer than two
/// usable points the exponent is 0.
pub fn growth_exponent(curve: &[f64], from: usize, to: usize) -> f64 {
    let pts: Vec<(f64, f64)> = (from.max(1)..=to.min(curve.len()))
        .filter(|&k| curve[k - 1] > 0.0)
        .map(|k| ((k as f64).ln(), curve[k - 1].ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
