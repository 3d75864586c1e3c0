use lare_core::nn::{Init, Tape};
use lare_core::{ActionValue, EpisodeView, Mlp64, Observation, SeededRng, Trajectory};
use lare_lrdsl::{ActionKind, EnvSignature, EvalError, LatentRewardProgram};
use serde::{Deserialize, Serialize};

use crate::error::{DecompError, Result};
use crate::loss::{rd_objective, sample_subset, subset_objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompKind {
    /// Decoder on raw observation and one-hot action, full-return regression.
    RdRaw,
    /// Decoder on latent rewards, full-return regression.
    Lare,
    /// Every step and agent receives an equal share of the return.
    Ircr,
    /// Raw decoder fit on random subsequences.
    Rrd,
    /// Raw decoder fit on random subsequences with the variance correction.
    RrdUnbiased,
    /// Signed sum of latent rewards, signs fit to the returns.
    SignAgg,
}

impl DecompKind {
    pub const ALL: [DecompKind; 6] = [
        DecompKind::RdRaw,
        DecompKind::Lare,
        DecompKind::Ircr,
        DecompKind::Rrd,
        DecompKind::RrdUnbiased,
        DecompKind::SignAgg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DecompKind::RdRaw => "rd-raw",
            DecompKind::Lare => "lare",
            DecompKind::Ircr => "ircr",
            DecompKind::Rrd => "rrd",
            DecompKind::RrdUnbiased => "rrd-unbiased",
            DecompKind::SignAgg => "sign-agg",
        }
    }

    pub fn needs_encoder(&self) -> bool {
        matches!(self, DecompKind::Lare | DecompKind::SignAgg)
    }

    pub fn has_decoder(&self) -> bool {
        matches!(
            self,
            DecompKind::RdRaw | DecompKind::Lare | DecompKind::Rrd | DecompKind::RrdUnbiased
        )
    }
}

impl std::fmt::Display for DecompKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Proxy-reward model.
#[derive(Debug, Clone)]
pub struct DecompositionModel {
    kind: DecompKind,
    sig: EnvSignature,
    encoder: Option<LatentRewardProgram>,
    decoder: Option<Mlp64>,
    signs: Option<Vec<f64>>,
    rrd_k: usize,
    /// Replace each agent's proxy reward with the mean across agents.
    pub agent_average: bool,
    /// IRCR only: rescale returns to `[0, 1]` with this `(min, max)` range.
    pub ircr_range: Option<(f64, f64)>,
}

/// Per-step, per-agent proxy rewards, indexed `[t][agent]`.
pub type ProxyRewards = Vec<Vec<f64>>;

impl DecompositionModel {
    /// Builds a model. `hidden` sets the decoder's hidden layer widths.
    pub fn new(
        kind: DecompKind,
        sig: EnvSignature,
        encoder: Option<LatentRewardProgram>,
        hidden: &[usize],
        rrd_k: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if kind.needs_encoder() && encoder.is_none() {
            return Err(DecompError::Missing {
                kind: kind.name(),
                what: "an encoder",
            });
        }
        let encoder = if kind.needs_encoder() { encoder } else { None };
        if let Some(e) = &encoder {
            if e.signature() != &sig {
                return Err(DecompError::Signature(format!(
                    "program built for {:?}, environment is {:?}",
                    e.signature(),
                    sig
                )));
            }
        }
        if matches!(kind, DecompKind::Rrd | DecompKind::RrdUnbiased) && rrd_k == 0 {
            return Err(DecompError::InvalidInput("subsequence length must be ≥ 1".into()));
        }
        let mut m = Self {
            kind,
            sig,
            encoder,
            decoder: None,
            signs: None,
            rrd_k,
            agent_average: false,
            ircr_range: None,
        };
        if kind.has_decoder() {
            let mut sizes = vec![m.input_dim()];
            sizes.extend_from_slice(hidden);
            sizes.push(1);
            m.decoder = Some(Mlp64::new(&sizes, Init::default(), rng)?);
        }
        if kind == DecompKind::SignAgg {
            m.signs = Some(vec![1.0; m.input_dim()]);
        }
        Ok(m)
    }

    pub fn ircr(sig: EnvSignature) -> Self {
        Self::new(DecompKind::Ircr, sig, None, &[], 1, &mut SeededRng::new(0)).expect("ircr needs nothing")
    }

    pub fn kind(&self) -> DecompKind {
        self.kind
    }

    pub fn signature(&self) -> &EnvSignature {
        &self.sig
    }

    pub fn encoder(&self) -> Option<&LatentRewardProgram> {
        self.encoder.as_ref()
    }

    pub fn decoder(&self) -> Option<&Mlp64> {
        self.decoder.as_ref()
    }

    pub fn decoder_mut(&mut self) -> Option<&mut Mlp64> {
        self.decoder.as_mut()
    }

    pub fn set_decoder(&mut self, net: Mlp64) -> Result<()> {
        if !self.kind.has_decoder() || net.input_dim() != self.input_dim() || net.output_dim() != 1 {
            return Err(DecompError::InvalidInput("decoder shape does not fit the model".into()));
        }
        self.decoder = Some(net);
        Ok(())
    }

    pub fn signs(&self) -> Option<&[f64]> {
        self.signs.as_deref()
    }

    pub fn set_signs(&mut self, signs: Vec<f64>) -> Result<()> {
        if self.kind != DecompKind::SignAgg || signs.len() != self.input_dim() {
            return Err(DecompError::InvalidInput("sign vector does not fit the model".into()));
        }
        self.signs = Some(signs);
        Ok(())
    }

    pub fn rrd_k(&self) -> usize {
        self.rrd_k
    }

    /// Length of the feature vector of one state-action pair.
    pub fn input_dim(&self) -> usize {
        match &self.encoder {
            Some(e) => e.dim(),
            None => {
                self.sig.obs_dim
                    + match self.sig.action {
                        ActionKind::Discrete { n } => n,
                        ActionKind::Continuous { dim } => dim,
                    }
            }
        }
    }

    /// Decoder input for one agent's observation and action: the latent
    /// reward vector, or the raw observation followed by the one-hot action.
    pub fn features(&self, obs: &Observation, act: &ActionValue) -> Result<Vec<f64>> {
        if let Some(e) = &self.encoder {
            return e.eval(obs, act).map_err(|err| match err {
                EvalError::Input(m) => DecompError::Signature(m),
                other => other.into(),
            });
        }
        if obs.len() != self.sig.obs_dim {
            return Err(DecompError::Signature(format!(
                "observation has {} entries, expected {}",
                obs.len(),
                self.sig.obs_dim
            )));
        }
        let mut x = obs.as_slice().to_vec();
        match (self.sig.action, act) {
            (ActionKind::Discrete { n }, ActionValue::DiscreteIndex(k)) if *k < n => {
                let base = x.len();
                x.resize(base + n, 0.0);
                x[base + k] = 1.0;
            }
            (ActionKind::Continuous { dim }, ActionValue::Continuous(v)) if v.len() == dim => {
                x.extend_from_slice(v);
            }
            _ => {
                return Err(DecompError::Signature(format!(
                    "action {act:?} does not match {:?}",
                    self.sig.action
                )))
            }
        }
        Ok(x)
    }

    fn features_of(&self, view: &EpisodeView<'_>) -> Result<Vec<Vec<Vec<f64>>>> {
        (0..view.len())
            .map(|t| {
                (0..view.n_agents())
                    .map(|a| self.features(view.obs(t, a), view.action(t, a)))
                    .collect()
            })
            .collect()
    }

    /// Proxy reward for every step and agent of an episode.
    pub fn proxy_rewards(&self, view: &EpisodeView<'_>) -> Result<ProxyRewards> {
        let (t_len, n) = (view.len(), view.n_agents());
        let mut out = match self.kind {
            DecompKind::Ircr => {
                let mut r = view.episodic_return();
                if let Some((lo, hi)) = self.ircr_range {
                    r = if hi > lo { (r - lo) / (hi - lo) } else { 0.0 };
                }
                let share = r / (t_len * n) as f64;
                vec![vec![share; n]; t_len]
            }
            DecompKind::SignAgg => {
                let s = self.signs.as_ref().expect("sign model has signs");
                self.features_of(view)?
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|z| z.iter().zip(s).map(|(a, b)| a * b).sum())
                            .collect()
                    })
                    .collect()
            }
            _ => {
                let net = self.decoder.as_ref().expect("decoder kinds have a decoder");
                let mut out = Vec::with_capacity(t_len);
                for row in self.features_of(view)? {
                    let mut r = Vec::with_capacity(n);
                    for x in row {
                        r.push(net.forward(&x)?[0]);
                    }
                    out.push(r);
                }
                out
            }
        };
        if self.agent_average {
            agent_average_ablation(&mut out);
        }
        if out.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DecompError::NonFinite("proxy reward".into()));
        }
        Ok(out)
    }

    /// Mean regression loss over `batch` and its gradient with respect to the
    /// decoder parameters. Subsequence kinds draw one subset per episode.
    pub fn loss_and_grad(&self, batch: &[EpisodeView<'_>], rng: &mut SeededRng) -> Result<(f64, Vec<f64>)> {
        let net = self.decoder.as_ref().ok_or(DecompError::Missing {
            kind: self.kind.name(),
            what: "a decoder",
        })?;
        if batch.is_empty() {
            return Err(DecompError::InvalidInput("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = net.zero_grads();
        let mut total = 0.0;
        for view in batch {
            let feats = self.features_of(view)?;
            let tapes: Vec<Vec<Tape<f64>>> = feats
                .iter()
                .map(|row| row.iter().map(|x| net.forward_cached(x)).collect())
                .collect::<lare_core::Result<_>>()?;
            let per_agent: Vec<Vec<f64>> = tapes
                .iter()
                .map(|row| row.iter().map(|tp| tp.output()[0]).collect())
                .collect();
            // agent averaging leaves per-step sums unchanged
            let x: Vec<f64> = per_agent.iter().map(|r| r.iter().sum()).collect();
            let ret = view.episodic_return();
            let (loss, dx) = match self.kind {
                DecompKind::Rrd | DecompKind::RrdUnbiased => {
                    if self.rrd_k > x.len() {
                        return Err(DecompError::InvalidInput(format!(
                            "subsequence length {} exceeds episode length {}",
                            self.rrd_k,
                            x.len()
                        )));
                    }
                    let subset = sample_subset(x.len(), self.rrd_k, rng)?;
                    subset_objective(&x, ret, &subset, self.kind == DecompKind::RrdUnbiased)?
                }
                _ => rd_objective(&x, ret),
            };
            if !loss.is_finite() {
                return Err(DecompError::NonFinite(format!("loss {loss}")));
            }
            total += loss * scale;
            for (row, d) in tapes.iter().zip(&dx) {
                if *d == 0.0 {
                    continue;
                }
                for tp in row {
                    net.backward(tp, &[d * scale], &mut grads);
                }
            }
        }
        Ok((total, grads))
    }
}

/// Replaces each agent's reward with the mean over agents at that step.
pub fn agent_average_ablation(proxy: &mut [Vec<f64>]) {
    for row in proxy {
        if row.len() > 1 {
            let m = row.iter().sum::<f64>() / row.len() as f64;
            row.iter_mut().for_each(|v| *v = m);
        }
    }
}

/// Mean absolute difference between proxy and ground-truth rewards over
/// every step and agent of `trajectories`.
pub fn reward_pred_error(model: &DecompositionModel, trajectories: &[Trajectory]) -> Result<f64> {
    let (mut total, mut n) = (0.0, 0usize);
    for traj in trajectories {
        let proxy = model.proxy_rewards(&traj.view())?;
        for (row, step) in proxy.iter().zip(traj.steps()) {
            for (p, r) in row.iter().zip(&step.per_agent_gt_reward) {
                total += (p - r).abs();
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(DecompError::InvalidInput("no steps to compare".into()));
    }
    Ok(total / n as f64)
}
