use std::collections::VecDeque;

use crate::error::{CoreError, Result};
use crate::rng::SeededRng;
use crate::trajectory::Trajectory;

/// Bounded FIFO of trajectories; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Trajectory>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(CoreError::InvalidInput("buffer capacity must be ≥ 1".into()));
        }
        Ok(Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, traj: Trajectory) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(traj);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trajectory> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Trajectory> {
        self.items.get(i)
    }

    /// Indices of `n` uniform draws with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(CoreError::EmptyBuffer);
        }
        if n == 0 {
            return Err(CoreError::InvalidInput("sample size must be ≥ 1".into()));
        }
        Ok((0..n).map(|_| rng.index(self.items.len())).collect())
    }

    pub fn sample(&self, n: usize, rng: &mut SeededRng) -> Result<Vec<&Trajectory>> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{ActionValue, Observation, Step};

    fn traj(tag: f64) -> Trajectory {
        Trajectory::from_steps(vec![Step {
            per_agent_obs: vec![Observation::new(vec![tag])],
            per_agent_action: vec![ActionValue::DiscreteIndex(0)],
            per_agent_gt_reward: vec![tag],
            timestep: 0,
        }])
        .unwrap()
    }

    #[test]
    fn single_element_sampled_repeatedly() {
        let mut b = ReplayBuffer::new(4).unwrap();
        b.push(traj(1.0));
        let mut rng = SeededRng::new(0);
        let s = b.sample(3, &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|t| t.episodic_return() == 1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(traj(i as f64));
        }
        let a = b.sample_indices(5, &mut SeededRng::new(17)).unwrap();
        let c = b.sample_indices(5, &mut SeededRng::new(17)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn empty_buffer_errors() {
        let b = ReplayBuffer::new(2).unwrap();
        assert!(matches!(
            b.sample(1, &mut SeededRng::new(0)),
            Err(CoreError::EmptyBuffer)
        ));
    }

    #[test]
    fn evicts_oldest() {
        let mut b = ReplayBuffer::new(2).unwrap();
        for i in 0..3 {
            b.push(traj(i as f64));
        }
        assert_eq!(b.len(), 2);
        let kept: Vec<f64> = b.iter().map(|t| t.episodic_return()).collect();
        assert_eq!(kept, vec![1.0, 2.0]);
    }

    #[test]
    fn uniform_frequencies() {
        // Direct counting: each of 10 indices should appear 10% ± 2% of 10⁴ draws.
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(traj(i as f64));
        }
        let idx = b.sample_indices(10_000, &mut SeededRng::new(2024)).unwrap();
        let mut counts = [0usize; 10];
        for i in idx {
            counts[i] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.1).abs() <= 0.02, "frequency {f}");
        }
    }
}
