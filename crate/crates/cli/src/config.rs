use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lare_envs::{ArenaConfig, ParticleEnv, ProbeConfig};
use lare_llm::{DeriveOptions, LlmBackendConfig};
use lare_rl::TrainConfig;
use lare_theory::{BoundParams, ConcentrationConfig, Featurization};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Built-in particle tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    TriangleArea,
    PointNavigation,
    CooperativeNavigation,
    PredatorPrey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub task: Task,
    /// Ignored by the fixed-size tasks.
    #[serde(default)]
    pub n_agents: Option<usize>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl EnvSpec {
    pub fn arena(&self) -> Result<ArenaConfig> {
        let n = self.n_agents.unwrap_or(3);
        let mut cfg = match self.task {
            Task::TriangleArea => ArenaConfig::triangle_area(),
            Task::PointNavigation => ArenaConfig::point_navigation(),
            Task::CooperativeNavigation => ArenaConfig::cooperative_navigation(n),
            Task::PredatorPrey => ArenaConfig::predator_prey(n),
        };
        if let Some(t) = self.max_steps {
            cfg.max_steps = t;
        }
        cfg.validate().context("env")?;
        Ok(cfg)
    }

    pub fn build(&self) -> Result<ParticleEnv> {
        Ok(ParticleEnv::new(self.arena()?)?)
    }
}

/// Where the latent reward program comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EncoderSource {
    /// The hand-written program for the task.
    Oracle,
    Inline { program: String },
    /// Relative paths resolve against the config file's directory.
    File { path: PathBuf },
    /// Derived per seed through the configured chat backend.
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub env: EnvSpec,
    /// `train.seed` is replaced by each entry of `seeds`.
    pub train: TrainConfig,
    #[serde(default)]
    pub encoder: Option<EncoderSource>,
    #[serde(default)]
    pub llm: Option<LlmBackendConfig>,
    #[serde(default)]
    pub derive: DeriveOptions,
    #[serde(default)]
    pub probes: ProbeConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub workers: usize,
    pub output_dir: PathBuf,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        if self.workers == 0 {
            bail!("workers: must be ≥ 1");
        }
        if self.derive.n_candidates == 0 {
            bail!("derive.n_candidates: must be ≥ 1");
        }
        self.env.arena()?;
        self.train.validate().context("train")?;
        if self.train.method.needs_encoder() && self.encoder.is_none() {
            bail!("encoder: method {} needs a latent reward program", self.train.method);
        }
        if let Some(EncoderSource::Llm) = &self.encoder {
            let llm = self.llm.as_ref().context("llm: required when encoder.source is llm")?;
            llm.validate().context("llm")?;
        }
        Ok(())
    }

    /// Resolves relative encoder paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let Some(EncoderSource::File { path }) = &mut self.encoder {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(dir) = self.llm.as_mut().and_then(|l| l.mock_dir.as_mut()) {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    /// Uses the offline backend in `dir` for any derivation.
    pub fn use_mock_dir(&mut self, dir: &Path) {
        let mut mock = LlmBackendConfig::mock(dir);
        if let Some(old) = &self.llm {
            mock.mock_mode = old.mock_mode;
        }
        self.llm = Some(mock);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretSpec {
    pub params: BoundParams,
    pub episodes: usize,
    pub n_seeds: usize,
    #[serde(default = "both")]
    pub featurizations: Vec<Featurization>,
}

fn both() -> Vec<Featurization> {
    vec![Featurization::Latent, Featurization::Raw]
}

/// Runs on the reference tabular instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default)]
    pub concentration: Option<ConcentrationConfig>,
    #[serde(default)]
    pub regret: Option<RegretSpec>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.concentration.is_none() && self.regret.is_none() {
            bail!("nothing to run: set concentration and/or regret");
        }
        if let Some(c) = &self.concentration {
            c.params.validate().context("concentration.params")?;
            if c.n_seeds == 0 {
                bail!("concentration.n_seeds: must be ≥ 1");
            }
        }
        if let Some(r) = &self.regret {
            r.params.validate().context("regret.params")?;
            if r.n_seeds == 0 || r.featurizations.is_empty() {
                bail!("regret: n_seeds and featurizations must be non-empty");
            }
        }
        Ok(())
    }
}

/// Parses JSON, naming the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("field `{path}`: {}", e.into_inner())
    })
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: ExperimentConfig = parse_json(&text).with_context(|| format!("in {}", path.display()))?;
    cfg.rebase(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

pub fn load_theory(path: &Path) -> Result<TheoryConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: TheoryConfig = parse_json(&text).with_context(|| format!("in {}", path.display()))?;
    if cfg.output_dir.is_relative() {
        cfg.output_dir = path.parent().unwrap_or(Path::new(".")).join(&cfg.output_dir);
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
        "env": {"task": "triangle-area"},
        "train": {"method": "ircr", "max_episodes": 4},
        "seeds": [0],
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg: ExperimentConfig = parse_json(MIN).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.derive.n_candidates, 5);
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn unknown_method_names_the_field() {
        let bad = MIN.replace("ircr", "vib");
        let err = parse_json::<ExperimentConfig>(&bad).unwrap_err().to_string();
        assert!(err.contains("train.method"), "{err}");
    }

    #[test]
    fn lare_without_encoder_is_rejected() {
        let cfg: ExperimentConfig = parse_json(&MIN.replace("ircr", "lare")).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("encoder"));
    }

    #[test]
    fn empty_seeds_rejected() {
        let cfg: ExperimentConfig = parse_json(&MIN.replace("[0]", "[]")).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn encoder_sources() {
        let e: EncoderSource = parse_json(r#"{"source": "inline", "program": "obs[0]"}"#).unwrap();
        assert_eq!(e, EncoderSource::Inline { program: "obs[0]".into() });
        assert_eq!(parse_json::<EncoderSource>(r#"{"source": "oracle"}"#).unwrap(), EncoderSource::Oracle);
    }
}
