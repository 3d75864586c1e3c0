use lare_core::nn::AdamConfig;
use lare_core::{Adam64, EpisodeView, ReplayBuffer, SeededRng, Trajectory};
use lare_lrdsl::{EnvSignature, LatentRewardProgram};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DecompKind, DecompositionModel};
use crate::signs::{episode_latent_sum, SignStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompConfig {
    #[serde(default = "d::hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "d::batch")]
    pub batch_size: usize,
    #[serde(default = "d::updates")]
    pub updates_per_episode: usize,
    /// Subsequence length of the subsampled losses.
    #[serde(default = "d::rrd_k")]
    pub rrd_k: usize,
    /// Replace per-agent proxy rewards with their per-step mean.
    #[serde(default)]
    pub agent_average: bool,
    /// IRCR: rescale returns to `[0, 1]` using the buffer's return range.
    #[serde(default)]
    pub ircr_minmax: bool,
}

mod d {
    pub fn hidden() -> Vec<usize> {
        vec![64, 64]
    }
    pub fn batch() -> usize {
        16
    }
    pub fn updates() -> usize {
        1
    }
    pub fn rrd_k() -> usize {
        10
    }
}

impl Default for DecompConfig {
    fn default() -> Self {
        Self {
            hidden: d::hidden(),
            adam: AdamConfig::default(),
            batch_size: d::batch(),
            updates_per_episode: d::updates(),
            rrd_k: d::rrd_k(),
            agent_average: false,
            ircr_minmax: false,
        }
    }
}

/// Owns a [`DecompositionModel`] and whatever state fitting it needs.
#[derive(Debug, Clone)]
pub struct DecompTrainer {
    model: DecompositionModel,
    cfg: DecompConfig,
    adam: Option<Adam64>,
    sign_stats: Option<SignStats>,
    return_range: Option<(f64, f64)>,
}

impl DecompTrainer {
    pub fn new(
        kind: DecompKind,
        sig: EnvSignature,
        encoder: Option<LatentRewardProgram>,
        cfg: DecompConfig,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let mut model = DecompositionModel::new(kind, sig, encoder, &cfg.hidden, cfg.rrd_k, rng)?;
        model.agent_average = cfg.agent_average;
        let adam = model.decoder().map(|n| Adam64::new(n.n_params(), cfg.adam));
        let sign_stats = (kind == DecompKind::SignAgg).then(|| SignStats::new(model.input_dim()));
        Ok(Self {
            model,
            cfg,
            adam,
            sign_stats,
            return_range: None,
        })
    }

    pub fn model(&self) -> &DecompositionModel {
        &self.model
    }

    pub fn config(&self) -> &DecompConfig {
        &self.cfg
    }

    /// Whether [`DecompTrainer::update`] changes anything.
    pub fn has_parameters(&self) -> bool {
        self.adam.is_some() || self.sign_stats.is_some()
    }

    /// Records a newly collected episode. Only its observations, actions and
    /// return are read.
    pub fn observe(&mut self, traj: &Trajectory) -> Result<()> {
        let view = traj.view();
        let r = view.episodic_return();
        self.return_range = Some(match self.return_range {
            None => (r, r),
            Some((lo, hi)) => (lo.min(r), hi.max(r)),
        });
        if self.cfg.ircr_minmax && self.model.kind() == DecompKind::Ircr {
            self.model.ircr_range = self.return_range;
        }
        if let Some(st) = &mut self.sign_stats {
            let enc = self.model.encoder().expect("sign model has an encoder");
            st.push(&episode_latent_sum(enc, &view)?, r);
        }
        Ok(())
    }

    /// One round of model fitting on batches drawn from `buffer`. Returns the
    /// mean loss, or `None` for parameter-free models.
    pub fn update(&mut self, buffer: &ReplayBuffer, rng: &mut SeededRng) -> Result<Option<f64>> {
        if let Some(st) = &self.sign_stats {
            let s = st.fit();
            let loss = st.loss(&s) / buffer.len().max(1) as f64;
            self.model.set_signs(s)?;
            return Ok(Some(loss));
        }
        let Some(adam) = &mut self.adam else {
            return Ok(None);
        };
        let mut total = 0.0;
        for _ in 0..self.cfg.updates_per_episode {
            let batch = buffer.sample(self.cfg.batch_size, rng)?;
            let views: Vec<EpisodeView<'_>> = batch.iter().map(|t| t.view()).collect();
            let (loss, grads) = self.model.loss_and_grad(&views, rng)?;
            let net = self.model.decoder_mut().expect("decoder present");
            adam.step(net.params_mut(), &grads)?;
            total += loss;
        }
        Ok(Some(total / self.cfg.updates_per_episode.max(1) as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lare_core::{ActionValue, Observation, Step};
    use lare_lrdsl::parse_program;

    fn episode(rng: &mut SeededRng) -> Trajectory {
        // reward = 2·obs[0] − obs[1]
        let steps = (0..4)
            .map(|t| {
                let o = vec![rng.uniform(), rng.uniform()];
                Step {
                    per_agent_gt_reward: vec![2.0 * o[0] - o[1]],
                    per_agent_obs: vec![Observation::new(o)],
                    per_agent_action: vec![ActionValue::DiscreteIndex(0)],
                    timestep: t,
                }
            })
            .collect();
        Trajectory::from_steps(steps).unwrap()
    }

    #[test]
    fn lare_loss_decreases() {
        let sig = EnvSignature::discrete(2, 2);
        let enc = parse_program("obs[0]\nobs[1]", &sig).unwrap();
        let cfg = DecompConfig {
            hidden: vec![16],
            adam: AdamConfig {
                lr: 1e-2,
                ..AdamConfig::default()
            },
            ..DecompConfig::default()
        };
        let mut rng = SeededRng::new(3);
        let mut tr = DecompTrainer::new(DecompKind::Lare, sig, Some(enc), cfg, &mut rng).unwrap();
        let mut buf = ReplayBuffer::new(200).unwrap();
        for _ in 0..100 {
            let e = episode(&mut rng);
            tr.observe(&e).unwrap();
            buf.push(e);
        }
        let first = tr.update(&buf, &mut rng).unwrap().unwrap();
        let mut last = first;
        for _ in 0..300 {
            last = tr.update(&buf, &mut rng).unwrap().unwrap();
        }
        assert!(last < 0.1 * first, "{first} → {last}");
    }

    #[test]
    fn ircr_has_no_parameters() {
        let sig = EnvSignature::discrete(2, 2);
        let mut rng = SeededRng::new(0);
        let mut tr = DecompTrainer::new(DecompKind::Ircr, sig, None, DecompConfig::default(), &mut rng).unwrap();
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(episode(&mut rng));
        assert!(!tr.has_parameters());
        assert_eq!(tr.update(&buf, &mut rng).unwrap(), None);
    }

    #[test]
    fn sign_model_fits_from_observed_episodes() {
        let sig = EnvSignature::discrete(2, 2);
        let enc = parse_program("obs[0] * 2\nobs[1]", &sig).unwrap();
        let mut rng = SeededRng::new(1);
        let mut tr =
            DecompTrainer::new(DecompKind::SignAgg, sig, Some(enc), DecompConfig::default(), &mut rng).unwrap();
        let mut buf = ReplayBuffer::new(50).unwrap();
        for _ in 0..20 {
            let e = episode(&mut rng);
            tr.observe(&e).unwrap();
            buf.push(e);
        }
        let loss = tr.update(&buf, &mut rng).unwrap().unwrap();
        assert!(loss < 1e-20);
        assert_eq!(tr.model().signs().unwrap(), &[1.0, -1.0]);
    }
}
