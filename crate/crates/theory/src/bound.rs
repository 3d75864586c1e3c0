use serde::{Deserialize, Serialize};

use crate::error::{Result, TheoryError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    /// Ridge strength.
    pub lambda: f64,
    /// Failure probability.
    pub delta: f64,
}

impl BoundParams {
    /// `λ = T`.
    pub fn for_horizon(horizon: usize, delta: f64) -> Self {
        Self {
            lambda: horizon as f64,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(TheoryError::Config(format!("λ must be positive, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(TheoryError::Config(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// Confidence radius after `k` episodes of length `horizon` in `dim`
    /// coordinates:
    /// `√(¼·T·d·log((1 + k·T²/λ) / (δ/10))) + √(λ·d)`.
    pub fn radius(&self, k: usize, horizon: usize, dim: usize) -> f64 {
        let t = horizon as f64;
        let d = dim as f64;
        let growth = 1.0 + k as f64 * t * t / self.lambda;
        (0.25 * t * d * (growth / (self.delta / 10.0)).ln()).sqrt() + (self.lambda * d).sqrt()
    }
}
