use lare_core::SeededRng;
use lare_envs::TabularInstance;

use crate::error::{Result, RlError};

/// Largest number of state-action pairs handled.
pub const MAX_TABULAR_PAIRS: usize = 64;

/// Finite-horizon action values and their greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSolution {
    /// `q[t][s·|A| + a]`
    pub q: Vec<Vec<f64>>,
    /// `policy[t][s]`, first maximiser on ties.
    pub policy: Vec<Vec<usize>>,
    /// `values[t][s]`
    pub values: Vec<Vec<f64>>,
}

impl TabularSolution {
    /// Expected return from the initial distribution.
    pub fn initial_value(&self, inst: &TabularInstance) -> f64 {
        inst.initial.iter().zip(&self.values[0]).map(|(p, v)| p * v).sum()
    }
}

/// Backward induction with per-pair `rewards` and the instance's transitions.
pub fn value_iteration(inst: &TabularInstance, rewards: &[f64]) -> Result<TabularSolution> {
    if rewards.len() != inst.n_pairs() {
        return Err(RlError::Config(format!(
            "{} rewards for {} state-action pairs",
            rewards.len(),
            inst.n_pairs()
        )));
    }
    let (ns, na, h) = (inst.n_states, inst.n_actions, inst.horizon);
    let mut q = vec![vec![0.0; ns * na]; h];
    let mut policy = vec![vec![0; ns]; h];
    let mut values = vec![vec![0.0; ns]; h + 1];
    for t in (0..h).rev() {
        for s in 0..ns {
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..na {
                let i = inst.pair(s, a);
                let next: f64 = inst.transitions[i].iter().zip(&values[t + 1]).map(|(p, v)| p * v).sum();
                q[t][i] = rewards[i] + next;
                if q[t][i] > best.1 {
                    best = (a, q[t][i]);
                }
            }
            policy[t][s] = best.0;
            values[t][s] = best.1;
        }
    }
    values.truncate(h);
    Ok(TabularSolution { q, policy, values })
}

/// Collects `episodes` uniformly random episodes, relabels every visited
/// pair with `proxy(s, a)`, averages the labels per pair (unvisited pairs get
/// zero) and runs Q iteration on the result with the known transitions.
pub fn tabular_q_train<F>(
    inst: &TabularInstance,
    mut proxy: F,
    episodes: usize,
    rng: &mut SeededRng,
) -> Result<TabularSolution>
where
    F: FnMut(usize, usize) -> f64,
{
    if inst.n_pairs() > MAX_TABULAR_PAIRS {
        return Err(RlError::Config(format!(
            "{} state-action pairs exceed {MAX_TABULAR_PAIRS}",
            inst.n_pairs()
        )));
    }
    // running means stay exact when a pair always gets the same label,
    // so ties between equally rewarded pairs survive
    let mut r_hat = vec![0.0; inst.n_pairs()];
    let mut count = vec![0usize; inst.n_pairs()];
    for _ in 0..episodes {
        for (s, a) in inst.rollout(rng, |_, _, rng| rng.index(inst.n_actions)) {
            let i = inst.pair(s, a);
            count[i] += 1;
            r_hat[i] += (proxy(s, a) - r_hat[i]) / count[i] as f64;
        }
    }
    if r_hat.iter().any(|r| !r.is_finite()) {
        return Err(RlError::NonFinite("proxy reward".into()));
    }
    value_iteration(inst, &r_hat)
}
