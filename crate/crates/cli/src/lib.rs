//! Experiment runner for latent-reward credit assignment.
//!
//! Configs are JSON documents ([`config`]). A run trains one policy set per
//! seed and writes per-seed training CSVs, a seed-averaged curve, a summary
//! and a manifest with everything needed to repeat it ([`run`]). The theory
//! runner writes the tabular concentration and regret tables
//! ([`theory_run`]).

pub mod config;
pub mod metrics;
pub mod oracle;
pub mod run;
pub mod theory_run;

pub use config::{load_experiment, load_theory, parse_json, EncoderSource, EnvSpec, ExperimentConfig, Task, TheoryConfig};
pub use metrics::{correlation_report, execution_rate, pearson_corr, reward_pred_error, Correlation, CorrelationReport};
pub use oracle::oracle_source;
pub use run::{run_experiment, RunSummary, Stage, StageError};
pub use theory_run::{run_theory, TheorySummary};
