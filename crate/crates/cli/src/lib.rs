//! Experiment runner for `qpe-spectra`: JSON config in, CSV and JSON out.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{validate_config, validate_study_config, ExperimentConfig, StudyConfig};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, run_oracle, run_prep_study, ExperimentReport, OracleReport, SCHEMA_VERSION};
