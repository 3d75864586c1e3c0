//! Empirical checks of ridge-regression reward estimation on small tabular
//! MDPs.
//!
//! Returns are regressed on per-episode visit counts, either of latent bins
//! or of raw state-action pairs. [`concentration_experiment`] measures how
//! often the estimate leaves its confidence ellipsoid, and
//! [`optimistic_regret_experiment`] compares optimism-driven learners that
//! use each featurization.

pub mod bound;
pub mod concentration;
pub mod error;
pub mod features;
pub mod regret;

pub use bound::BoundParams;
pub use concentration::{
    concentration_experiment, ConcentrationConfig, ConcentrationResult, ConcentrationRow, CONCENTRATION_CSV_HEADER,
};
pub use error::{Result, TheoryError};
pub use features::{latent_frequency, raw_frequency, Featurization};
pub use regret::{growth_exponent, optimistic_regret, optimistic_regret_experiment, RegretResult, REGRET_CSV_HEADER};
