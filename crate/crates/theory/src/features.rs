use lare_envs::{TabularInstance, TabularPolicy};
use serde::{Deserialize, Serialize};

/// Which space rewards are regressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Featurization {
    /// One coordinate per latent bin.
    Latent,
    /// One coordinate per state-action pair.
    Raw,
}

impl Featurization {
    pub fn dim(&self, inst: &TabularInstance) -> usize {
        match self {
            Featurization::Latent => inst.n_latent,
            Featurization::Raw => inst.n_pairs(),
        }
    }

    /// Per-episode visit counts of every coordinate.
    pub fn counts(&self, pairs: &[(usize, usize)], inst: &TabularInstance) -> Vec<f64> {
        match self {
            Featurization::Latent => latent_frequency(pairs, inst),
            Featurization::Raw => raw_frequency(pairs, inst),
        }
    }

    /// Expected visit counts under `policy`.
    pub fn expected(&self, policy: &TabularPolicy, inst: &TabularInstance) -> Vec<f64> {
        match self {
            Featurization::Latent => inst.latent_frequency(policy),
            Featurization::Raw => inst.pair_frequency(policy),
        }
    }

    /// True reward vector in this space.
    pub fn true_rewards(&self, inst: &TabularInstance) -> Vec<f64> {
        match self {
            Featurization::Latent => inst.latent_reward.clone(),
            Featurization::Raw => inst.pair_rewards(),
        }
    }
}

impl std::fmt::Display for Featurization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Featurization::Latent => "latent",
            Featurization::Raw => "raw",
        })
    }
}

/// Number of steps of the episode that fall in each latent bin.
pub fn latent_frequency(pairs: &[(usize, usize)], inst: &TabularInstance) -> Vec<f64> {
    let mut h = vec![0.0; inst.n_latent];
    for &(s, a) in pairs {
        h[inst.latent_map[inst.pair(s, a)]] += 1.0;
    }
    h
}

/// Number of steps of the episode spent on each state-action pair.
pub fn raw_frequency(pairs: &[(usize, usize)], inst: &TabularInstance) -> Vec<f64> {
    let mut h = vec![0.0; inst.n_pairs()];
    for &(s, a) in pairs {
        h[inst.pair(s, a)] += 1.0;
    }
    h
}
