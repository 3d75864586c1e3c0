use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use lare_core::SeededRng;
use lare_envs::{probe_set, ParticleEnv};
use lare_llm::{derive_latent_reward_fn, DerivationLog, RoleTemplate, TaskSpec};
use lare_lrdsl::{parse_program, LatentRewardProgram};
use lare_rl::{train, TrainingRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EncoderSource, ExperimentConfig};
use crate::oracle::oracle_source;

/// Which part of a run failed; decides the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Derivation,
    Training,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Derivation => 3,
            Stage::Training => 4,
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.stage {
            Stage::Config => "configuration error",
            Stage::Derivation => "derivation failed",
            Stage::Training => "training aborted",
        };
        write!(f, "{what}: {:#}", self.error)
    }
}

impl std::error::Error for StageError {}

pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            error: e.into(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// SHA-256 of every regular file directly inside `dir`, by file name.
pub fn hash_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            let bytes = std::fs::read(entry.path())?;
            out.insert(entry.file_name().to_string_lossy().into_owned(), sha256_hex(&bytes));
        }
    }
    Ok(out)
}

const PROBE_STREAM: u64 = 0x9b0e;

pub fn task_spec(env: &ParticleEnv) -> Result<TaskSpec> {
    let t = env.task_text();
    Ok(TaskSpec::new(t.description, t.state_form, t.action_form, env.signature())?)
}

/// Runs the generation pipeline against the configured backend.
pub fn derive_program(
    cfg: &ExperimentConfig,
    env: &mut ParticleEnv,
    seed: u64,
) -> Result<(LatentRewardProgram, DerivationLog)> {
    let llm = cfg.llm.as_ref().context("no llm backend configured")?;
    let mut backend = llm.build()?;
    let mut rng = SeededRng::new(seed).derive(PROBE_STREAM);
    let probes = probe_set(env, cfg.probes, &mut rng)?;
    let task = task_spec(env)?;
    Ok(derive_latent_reward_fn(
        backend.as_mut(),
        &RoleTemplate::default(),
        &task,
        &probes,
        cfg.derive,
    )?)
}

/// The encoder for one seed, with the derivation log when one ran.
pub fn resolve_encoder(
    cfg: &ExperimentConfig,
    env: &mut ParticleEnv,
    seed: u64,
) -> Result<Option<(LatentRewardProgram, Option<DerivationLog>)>, StageError> {
    let sig = env.signature();
    let parse = |src: &str| parse_program(src, &sig).map_err(|e| anyhow!("{e}"));
    Ok(match &cfg.encoder {
        None => None,
        Some(EncoderSource::Oracle) => Some((parse(&oracle_source(env.config())).stage(Stage::Config)?, None)),
        Some(EncoderSource::Inline { program }) => Some((parse(program).context("encoder.program").stage(Stage::Config)?, None)),
        Some(EncoderSource::File { path }) => {
            let src = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .stage(Stage::Config)?;
            Some((parse(&src).with_context(|| path.display().to_string()).stage(Stage::Config)?, None))
        }
        Some(EncoderSource::Llm) => {
            let (p, log) = derive_program(cfg, env, seed).stage(Stage::Derivation)?;
            Some((p, Some(log)))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_eval: f64,
    pub final_reward_pred_error: Option<f64>,
    pub derivation_rounds: Option<usize>,
    pub program_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: Option<String>,
    pub method: String,
    pub seeds: Vec<SeedSummary>,
    pub final_mean: f64,
    pub final_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// Mock reply files by name, when a mock backend was used.
    pub fixtures: BTreeMap<String, String>,
}

struct SeedOutput {
    summary: SeedSummary,
    record: TrainingRecord,
    program: Option<String>,
    log: Option<DerivationLog>,
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput, StageError> {
    let mut env = cfg.env.build().stage(Stage::Config)?;
    let encoder = resolve_encoder(cfg, &mut env, seed)?;
    let (program, log) = match encoder {
        Some((p, l)) => (Some(p), l),
        None => (None, None),
    };
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    let used = program.clone().filter(|_| tc.method.needs_encoder());
    let record = train(&mut env, &tc, used)
        .with_context(|| format!("seed {seed}"))
        .stage(Stage::Training)?;
    let source = program.map(|p| p.to_string());
    Ok(SeedOutput {
        summary: SeedSummary {
            seed,
            final_eval: record.final_eval().unwrap_or(f64::NAN),
            final_reward_pred_error: record.rows.last().and_then(|r| r.reward_pred_error),
            derivation_rounds: log.as_ref().map(|l| l.rounds.len()),
            program_sha256: source.as_deref().map(|s| sha256_hex(s.as_bytes())),
        },
        record,
        program: source,
        log,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

pub const CURVE_CSV_HEADER: &str = "episode,mean_return,std_return,n_seeds";

/// Evaluation returns averaged over seeds at each evaluation episode.
pub fn curve_csv(records: &[TrainingRecord]) -> String {
    use std::fmt::Write as _;
    let mut s = format!("{CURVE_CSV_HEADER}\n");
    let n = records.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    for i in 0..n {
        let vals: Vec<f64> = records.iter().map(|r| r.rows[i].eval_return_mean).collect();
        let (m, sd) = mean_std(&vals);
        let _ = writeln!(s, "{},{m},{sd},{}", records[0].rows[i].episode, vals.len());
    }
    s
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Trains every seed and writes the run directory:
///
/// ```text
/// config.json  manifest.json  summary.json  curve.csv
/// seed_<s>/training.csv  seed_<s>/program.lrd  seed_<s>/derivation.json
/// ```
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, StageError> {
    cfg.validate().stage(Stage::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .stage(Stage::Config)?;
    let outputs: Vec<SeedOutput> = pool.install(|| {
        use rayon::prelude::*;
        cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect::<Result<_, _>>()
    })?;

    let out = &cfg.output_dir;
    let io = |r: Result<()>| r.stage(Stage::Training);
    for o in &outputs {
        let dir = seed_dir(out, o.summary.seed);
        io(write_atomic(&dir.join("training.csv"), o.record.to_csv().as_bytes()))?;
        if let Some(p) = &o.program {
            io(write_atomic(&dir.join("program.lrd"), p.as_bytes()))?;
        }
        if let Some(l) = &o.log {
            io(write_atomic(&dir.join("derivation.json"), l.to_json().as_bytes()))?;
        }
    }
    let records: Vec<TrainingRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    io(write_atomic(&out.join("curve.csv"), curve_csv(&records).as_bytes()))?;

    let finals: Vec<f64> = outputs.iter().map(|o| o.summary.final_eval).collect();
    let (final_mean, final_std) = mean_std(&finals);
    let summary = RunSummary {
        name: cfg.name.clone(),
        method: cfg.train.method.to_string(),
        seeds: outputs.into_iter().map(|o| o.summary).collect(),
        final_mean,
        final_std,
    };
    let config_json = serde_json::to_string_pretty(cfg).stage(Stage::Config)?;
    let fixtures = match cfg.llm.as_ref().and_then(|l| l.mock_dir.as_ref()) {
        Some(dir) if matches!(cfg.encoder, Some(EncoderSource::Llm)) => hash_dir(dir).stage(Stage::Config)?,
        _ => BTreeMap::new(),
    };
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_json.as_bytes()),
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        fixtures,
    };
    io(write_atomic(&out.join("config.json"), config_json.as_bytes()))?;
    io(write_atomic(&out.join("manifest.json"), pretty(&manifest).as_bytes()))?;
    io(write_atomic(&out.join("summary.json"), pretty(&summary).as_bytes()))?;
    Ok(summary)
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

pub fn load_summary(run_dir: &Path) -> Result<RunSummary> {
    let p = run_dir.join("summary.json");
    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
    crate::config::parse_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Stage::Config.exit_code(), 2);
        assert_eq!(Stage::Derivation.exit_code(), 3);
        assert_eq!(Stage::Training.exit_code(), 4);
    }

    #[test]
    fn sha_of_empty() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
