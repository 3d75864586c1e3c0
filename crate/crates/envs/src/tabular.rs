//! Small finite-horizon MDPs whose reward depends on the state-action pair
//! only through a latent bin.

use lare_core::SeededRng;
use serde::{Deserialize, Serialize};

use crate::error::{EnvError, Result};

/// Largest number of stationary deterministic policies [`TabularInstance::policies`]
/// will enumerate.
pub const MAX_POLICIES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularInstance {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    /// Row `s·|A| + a` is the next-state distribution.
    pub transitions: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// Latent bin of pair `s·|A| + a`.
    pub latent_map: Vec<usize>,
    pub n_latent: usize,
    /// Reward of each latent bin, in `[0, 1]`.
    pub latent_reward: Vec<f64>,
    /// Each step's reward is perturbed by `noise_scale·U(−½, ½)` in returns.
    pub noise_scale: f64,
}

/// Stationary deterministic policy: action per state.
pub type TabularPolicy = Vec<usize>;

fn normalise(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

impl TabularInstance {
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EnvError::Config(m));
        let sa = self.n_pairs();
        if sa == 0 || self.horizon == 0 {
            return bad("empty instance".into());
        }
        if self.transitions.len() != sa || self.latent_map.len() != sa {
            return bad("transition or latent table has the wrong size".into());
        }
        let dist_ok = |d: &Vec<f64>| {
            d.len() == self.n_states
                && d.iter().all(|p| p.is_finite() && *p >= 0.0)
                && (d.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        if !self.transitions.iter().all(dist_ok) || !dist_ok(&self.initial) {
            return bad("rows must be probability distributions over states".into());
        }
        if self.n_latent == 0 || self.n_latent >= sa {
            return bad(format!("need 1 ≤ |D| < |S||A|, got |D| = {}", self.n_latent));
        }
        let mut hit = vec![false; self.n_latent];
        for &z in &self.latent_map {
            if z >= self.n_latent {
                return bad(format!("latent bin {z} out of range"));
            }
            hit[z] = true;
        }
        if !hit.iter().all(|&h| h) {
            return bad("latent map is not surjective".into());
        }
        if self.latent_reward.len() != self.n_latent
            || !self.latent_reward.iter().all(|r| (0.0..=1.0).contains(r))
        {
            return bad("latent rewards must lie in [0, 1]".into());
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad("noise scale must be non-negative".into());
        }
        Ok(())
    }

    /// Random instance: transition rows and the initial distribution are
    /// normalised uniform weights, the latent map assigns every bin at least
    /// once, and bin rewards are uniform in `[0, 1]`.
    pub fn random(
        n_states: usize,
        n_actions: usize,
        n_latent: usize,
        horizon: usize,
        noise_scale: f64,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let sa = n_states * n_actions;
        let transitions = (0..sa)
            .map(|_| {
                let mut w: Vec<f64> = (0..n_states).map(|_| rng.uniform() + 1e-3).collect();
                normalise(&mut w);
                w
            })
            .collect();
        let mut initial: Vec<f64> = (0..n_states).map(|_| rng.uniform() + 1e-3).collect();
        normalise(&mut initial);
        let mut latent_map: Vec<usize> = (0..sa)
            .map(|i| if i < n_latent { i } else { rng.index(n_latent.max(1)) })
            .collect();
        // Fisher-Yates so the guaranteed bins land on random pairs
        for i in (1..sa).rev() {
            let j = rng.index(i + 1);
            latent_map.swap(i, j);
        }
        let latent_reward = (0..n_latent).map(|_| rng.uniform()).collect();
        let inst = Self {
            n_states,
            n_actions,
            horizon,
            transitions,
            initial,
            latent_map,
            n_latent,
            latent_reward,
            noise_scale,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// `|S| = 4`, `|A| = 3`, `|D| = 3`, `T = 5`, unit noise.
    pub fn reference_concentration() -> Self {
        Self::random(4, 3, 3, 5, 1.0, &mut SeededRng::new(20_240_601)).expect("valid reference")
    }

    /// `|S| = 4`, `|A| = 2`, `|D| = 3`, `T = 5`, unit noise.
    pub fn reference_regret() -> Self {
        Self::random(4, 2, 3, 5, 1.0, &mut SeededRng::new(20_240_602)).expect("valid reference")
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.latent_reward[self.latent_map[self.pair(s, a)]]
    }

    /// Reward of every pair, indexed by `s·|A| + a`.
    pub fn pair_rewards(&self) -> Vec<f64> {
        self.latent_map.iter().map(|&z| self.latent_reward[z]).collect()
    }

    /// Samples one episode of `(state, action)` pairs.
    pub fn rollout<F>(&self, rng: &mut SeededRng, mut policy: F) -> Vec<(usize, usize)>
    where
        F: FnMut(usize, usize, &mut SeededRng) -> usize,
    {
        let mut s = rng.categorical(&self.initial);
        let mut out = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let a = policy(t, s, rng);
            out.push((s, a));
            s = rng.categorical(&self.transitions[self.pair(s, a)]);
        }
        out
    }

    /// Noisy episodic return of a rollout.
    pub fn noisy_return(&self, pairs: &[(usize, usize)], rng: &mut SeededRng) -> f64 {
        pairs
            .iter()
            .map(|&(s, a)| self.reward(s, a) + self.noise_scale * (rng.uniform() - 0.5))
            .sum()
    }

    /// Expected visit counts of every pair under `policy`, by forward
    /// propagation of the state distribution.
    pub fn pair_frequency(&self, policy: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.n_pairs()];
        let mut d = self.initial.clone();
        for _ in 0..self.horizon {
            let mut next = vec![0.0; self.n_states];
            for (s, &ps) in d.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                let i = self.pair(s, policy[s]);
                h[i] += ps;
                for (n, p) in next.iter_mut().zip(&self.transitions[i]) {
                    *n += ps * p;
                }
            }
            d = next;
        }
        h
    }

    /// Expected visit counts of every latent bin under `policy`.
    pub fn latent_frequency(&self, policy: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.n_latent];
        for (i, f) in self.pair_frequency(policy).into_iter().enumerate() {
            h[self.latent_map[i]] += f;
        }
        h
    }

    /// Expected return of `policy`.
    pub fn policy_value(&self, policy: &[usize]) -> f64 {
        self.latent_frequency(policy)
            .iter()
            .zip(&self.latent_reward)
            .map(|(h, r)| h * r)
            .sum()
    }

    /// All stationary deterministic policies in lexicographic order.
    pub fn policies(&self) -> Result<Vec<TabularPolicy>> {
        let count = (self.n_actions as f64).powi(self.n_states as i32);
        if count > MAX_POLICIES as f64 {
            return Err(EnvError::Config(format!(
                "{count} policies exceed the enumeration limit of {MAX_POLICIES}"
            )));
        }
        let count = count as usize;
        Ok((0..count)
            .map(|mut k| {
                let mut p = vec![0; self.n_states];
                for s in (0..self.n_states).rev() {
                    p[s] = k % self.n_actions;
                    k /= self.n_actions;
                }
                p
            })
            .collect())
    }
}
