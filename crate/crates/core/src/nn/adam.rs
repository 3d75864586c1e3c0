use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected adaptive moment estimation.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    cfg: AdamConfig,
    m: Vec<S>,
    v: Vec<S>,
    t: u64,
}

impl<S: Scalar> Adam<S> {
    pub fn new(n_params: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            m: vec![S::zero(); n_params],
            v: vec![S::zero(); n_params],
            t: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [S], grads: &[S]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(CoreError::ShapeMismatch {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        self.t += 1;
        let b1 = S::c(self.cfg.beta1);
        let b2 = S::c(self.cfg.beta2);
        let one = S::one();
        let bc1 = one - S::c(self.cfg.beta1.powi(self.t as i32));
        let bc2 = one - S::c(self.cfg.beta2.powi(self.t as i32));
        let lr = S::c(self.cfg.lr);
        let eps = S::c(self.cfg.eps);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = Adam::<f64>::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 3.0];
        opt.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        // t = 1: m̂ = g, v̂ = g², Δ = −lr · g / (|g| + ε)
        let cfg = AdamConfig {
            lr: 0.01,
            ..Default::default()
        };
        let mut opt = Adam::<f64>::new(2, cfg);
        let mut p = vec![0.0, 0.0];
        let g = [0.3, -4.0];
        opt.step(&mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            let expected = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_steps_move_against_gradient() {
        let mut opt = Adam::<f32>::new(1, AdamConfig::default());
        let mut p = vec![0.0f32];
        opt.step(&mut p, &[1.0]).unwrap();
        let after_one = p[0];
        opt.step(&mut p, &[1.0]).unwrap();
        assert!(after_one < 0.0 && p[0] < after_one);
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = Adam::<f64>::new(2, AdamConfig::default());
        assert!(opt.step(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
