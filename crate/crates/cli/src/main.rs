use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lare_cli::config::{load_experiment, load_theory, ExperimentConfig};
use lare_cli::metrics::correlation_report;
use lare_cli::run::{derive_program, load_summary, pretty, resolve_encoder, run_experiment, write_atomic, StageExt};
use lare_cli::{run_theory, Stage, StageError};
use lare_core::SeededRng;

#[derive(Parser)]
#[command(name = "lare", version, about = "Latent-reward credit assignment experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run only the program-generation pipeline and save its result.
    Derive {
        #[arg(long)]
        config: PathBuf,
        /// Replay replies from this directory instead of calling a server.
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for program.lrd and derivation.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every seed of an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tabular concentration and regret experiments.
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a finished run, or measure factor correlations for a config.
    Report {
        #[arg(long, conflicts_with = "correlation")]
        run: Option<PathBuf>,
        /// Experiment config whose env and encoder are measured.
        #[arg(long)]
        correlation: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
    },
    /// Check that mock replies drive every seed's derivation to a verified program.
    VerifyFixtures {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mock_dir: PathBuf,
    },
}

fn experiment(path: &Path, mock_dir: Option<&Path>) -> Result<ExperimentConfig, StageError> {
    let mut cfg = load_experiment(path).stage(Stage::Config)?;
    if let Some(d) = mock_dir {
        cfg.use_mock_dir(d);
    }
    cfg.validate().stage(Stage::Config)?;
    Ok(cfg)
}

fn execute(cmd: Cmd) -> Result<(), StageError> {
    match cmd {
        Cmd::Derive { config, mock_dir, seed, out } => {
            let cfg = experiment(&config, mock_dir.as_deref())?;
            let mut env = cfg.env.build().stage(Stage::Config)?;
            let (prog, log) = derive_program(&cfg, &mut env, seed).stage(Stage::Derivation)?;
            write_atomic(&out.join("program.lrd"), prog.to_string().as_bytes()).stage(Stage::Derivation)?;
            write_atomic(&out.join("derivation.json"), log.to_json().as_bytes()).stage(Stage::Derivation)?;
            println!("{prog}");
            eprintln!("{} rounds, {} with error feedback", log.rounds.len(), log.error_feedback_rounds());
        }
        Cmd::Train { config, mock_dir, out } => {
            let mut cfg = experiment(&config, mock_dir.as_deref())?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let s = run_experiment(&cfg)?;
            println!("{}: final return {:.3} ± {:.3} over {} seeds", s.method, s.final_mean, s.final_std, s.seeds.len());
            println!("wrote {}", cfg.output_dir.display());
        }
        Cmd::Theory { config, out } => {
            let mut cfg = load_theory(&config).stage(Stage::Config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let s = run_theory(&cfg).stage(Stage::Training)?;
            print!("{}", pretty(&s));
        }
        Cmd::Report { run, correlation, steps, seed, mock_dir } => {
            if let Some(dir) = run {
                let s = load_summary(&dir).stage(Stage::Config)?;
                println!("seed,final_eval,final_reward_pred_error");
                for r in &s.seeds {
                    let rpe = r.final_reward_pred_error.map(|v| v.to_string()).unwrap_or_default();
                    println!("{},{},{rpe}", r.seed, r.final_eval);
                }
                println!("# {}: {:.3} ± {:.3}", s.method, s.final_mean, s.final_std);
            } else {
                let path = correlation.context("pass --run or --correlation").stage(Stage::Config)?;
                let cfg = experiment(&path, mock_dir.as_deref())?;
                let mut env = cfg.env.build().stage(Stage::Config)?;
                let (prog, _) = resolve_encoder(&cfg, &mut env, seed)?
                    .context("the config has no encoder")
                    .stage(Stage::Config)?;
                let rep = correlation_report(&mut env, &prog, steps, &mut SeededRng::new(seed)).stage(Stage::Training)?;
                let (raw, latent) = rep.table_cells();
                println!("states {raw}  latent {latent}  ({} samples)", rep.samples);
            }
        }
        Cmd::VerifyFixtures { config, mock_dir } => {
            let cfg = experiment(&config, Some(&mock_dir))?;
            for &seed in &cfg.seeds {
                let mut env = cfg.env.build().stage(Stage::Config)?;
                let (_, log) = derive_program(&cfg, &mut env, seed)
                    .with_context(|| format!("seed {seed}"))
                    .stage(Stage::Derivation)?;
                println!(
                    "seed {seed}: ok after {} rounds ({} with error feedback)",
                    log.rounds.len(),
                    log.error_feedback_rounds()
                );
            }
            for (name, hash) in lare_cli::run::hash_dir(&mock_dir).stage(Stage::Config)? {
                println!("{hash}  {name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
