//! Experiment runner: JSON configs in, per-round CSVs and summaries out.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
