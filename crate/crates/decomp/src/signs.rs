use lare_core::EpisodeView;
use lare_lrdsl::LatentRewardProgram;

use crate::error::{DecompError, Result};

/// Largest latent dimension searched exhaustively.
pub const EXHAUSTIVE_MAX_DIM: usize = 16;

/// Sufficient statistics of `Σ_τ (R_τ − sᵀZ_τ)²`, where `Z_τ` is the latent
/// reward summed over the steps and agents of episode `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignStats {
    gram: Vec<f64>,
    cross: Vec<f64>,
    ret_sq: f64,
    dim: usize,
}

impl SignStats {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: vec![0.0; dim * dim],
            cross: vec![0.0; dim],
            ret_sq: 0.0,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, z: &[f64], ret: f64) {
        let d = self.dim;
        for i in 0..d {
            self.cross[i] += z[i] * ret;
            for j in 0..d {
                self.gram[i * d + j] += z[i] * z[j];
            }
        }
        self.ret_sq += ret * ret;
    }

    /// Squared error of sign vector `s`.
    pub fn loss(&self, s: &[f64]) -> f64 {
        let d = self.dim;
        let mut q = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.gram[i * d + j] * s[j];
            }
            q += s[i] * row;
        }
        let lin: f64 = s.iter().zip(&self.cross).map(|(a, b)| a * b).sum();
        self.ret_sq - 2.0 * lin + q
    }

    /// Loss-minimising sign vector.
    ///
    /// Up to [`EXHAUSTIVE_MAX_DIM`] every vector is tried, in lexicographic
    /// order with `+1` before `−1`, and the first minimiser wins. Above that,
    /// coordinate descent from all `+1` flips one sign at a time while the
    /// loss strictly decreases.
    pub fn fit(&self) -> Vec<f64> {
        let d = self.dim;
        if d <= EXHAUSTIVE_MAX_DIM {
            let mut best = (f64::INFINITY, vec![1.0; d]);
            let mut s = vec![1.0; d];
            for m in 0u32..(1u32 << d) {
                for (i, si) in s.iter_mut().enumerate() {
                    *si = if m >> (d - 1 - i) & 1 == 1 { -1.0 } else { 1.0 };
                }
                let l = self.loss(&s);
                if l < best.0 {
                    best = (l, s.clone());
                }
            }
            best.1
        } else {
            let mut s = vec![1.0; d];
            let mut cur = self.loss(&s);
            loop {
                let mut improved = false;
                for i in 0..d {
                    s[i] = -s[i];
                    let l = self.loss(&s);
                    if l < cur {
                        cur = l;
                        improved = true;
                    } else {
                        s[i] = -s[i];
                    }
                }
                if !improved {
                    return s;
                }
            }
        }
    }
}

/// Latent reward of `encoder` summed over an episode's steps and agents.
pub fn episode_latent_sum(encoder: &LatentRewardProgram, view: &EpisodeView<'_>) -> Result<Vec<f64>> {
    let mut z = vec![0.0; encoder.dim()];
    for t in 0..view.len() {
        for a in 0..view.n_agents() {
            let v = encoder.eval(view.obs(t, a), view.action(t, a))?;
            z.iter_mut().zip(v).for_each(|(acc, x)| *acc += x);
        }
    }
    Ok(z)
}

/// Fits signs of the encoder's factors to the episodes' returns.
pub fn fit_signs(encoder: &LatentRewardProgram, episodes: &[EpisodeView<'_>]) -> Result<Vec<f64>> {
    if episodes.is_empty() {
        return Err(DecompError::InvalidInput("no episodes to fit signs on".into()));
    }
    let mut stats = SignStats::new(encoder.dim());
    for v in episodes {
        stats.push(&episode_latent_sum(encoder, v)?, v.episodic_return());
    }
    Ok(stats.fit())
}
