use std::fmt::Write as _;

use anyhow::Result;
use lare_core::SeededRng;
use lare_envs::TabularInstance;
use lare_theory::{concentration_experiment, growth_exponent, optimistic_regret_experiment, Featurization, RegretResult};
use serde::{Deserialize, Serialize};

use crate::config::TheoryConfig;
use crate::run::{pretty, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub violation_rate: f64,
    pub seeds_violated: usize,
    pub max_norm_ratio: f64,
    pub max_radius_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub featurization: Featurization,
    pub mean_final: f64,
    /// Log-log slope of the mean curve over the last 80% of episodes.
    pub growth_exponent: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheorySummary {
    pub concentration: Option<ConcentrationSummary>,
    pub regret: Vec<RegretSummary>,
}

const CONCENTRATION_STREAM: u64 = 1;
const REGRET_STREAM: u64 = 2;

/// Mean regret curves side by side, `k,<featurization>...`.
pub fn regret_mean_csv(results: &[RegretResult]) -> String {
    let mut s = String::from("k");
    for r in results {
        let _ = write!(s, ",{}", r.featurization);
    }
    s.push('\n');
    let curves: Vec<Vec<f64>> = results.iter().map(RegretResult::mean_curve).collect();
    let n = curves.iter().map(Vec::len).min().unwrap_or(0);
    for k in 0..n {
        let _ = write!(s, "{}", k + 1);
        for c in &curves {
            let _ = write!(s, ",{}", c[k]);
        }
        s.push('\n');
    }
    s
}

/// Writes `concentration.csv`, `regret_<featurization>.csv`,
/// `regret_mean.csv` and `theory_summary.json` under the output directory.
pub fn run_theory(cfg: &TheoryConfig) -> Result<TheorySummary> {
    cfg.validate()?;
    let root = SeededRng::new(cfg.seed);
    let out = &cfg.output_dir;
    let mut summary = TheorySummary::default();
    if let Some(c) = &cfg.concentration {
        let inst = TabularInstance::reference_concentration();
        let res = concentration_experiment(&inst, c, &root.derive(CONCENTRATION_STREAM))?;
        write_atomic(&out.join("concentration.csv"), res.to_csv().as_bytes())?;
        summary.concentration = Some(ConcentrationSummary {
            violation_rate: res.violation_rate,
            seeds_violated: res.seeds_violated,
            max_norm_ratio: res.max_norm_ratio,
            max_radius_ratio: res.radius_ratio.iter().copied().fold(0.0, f64::max),
        });
    }
    if let Some(r) = &cfg.regret {
        let inst = TabularInstance::reference_regret();
        let rng = root.derive(REGRET_STREAM);
        let mut results = Vec::new();
        for &feat in &r.featurizations {
            let res = optimistic_regret_experiment(&inst, &r.params, r.episodes, feat, r.n_seeds, &rng)?;
            write_atomic(&out.join(format!("regret_{feat}.csv")), res.to_csv().as_bytes())?;
            summary.regret.push(RegretSummary {
                featurization: feat,
                mean_final: res.mean_final(),
                growth_exponent: growth_exponent(&res.mean_curve(), r.episodes / 5, r.episodes),
            });
            results.push(res);
        }
        write_atomic(&out.join("regret_mean.csv"), regret_mean_csv(&results).as_bytes())?;
    }
    write_atomic(&out.join("theory_summary.json"), pretty(&summary).as_bytes())?;
    Ok(summary)
}
