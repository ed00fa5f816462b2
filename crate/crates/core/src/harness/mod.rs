//! Config-driven experiments: transfer versus baseline learning curves,
//! negative-transfer checks, modality ablations, and their reports.

pub mod ablation;
pub mod config;
pub mod experiment;
pub mod groups;
pub mod report;

use thiserror::Error;

pub use config::{load_config, parse_config, ExperimentConfig, LoadedConfig, Mode, SCHEMA_VERSION};
pub use experiment::{build_test_set, prepare_trial, run_experiment, run_trial, ArmResult, RunResult, TestSet, TrialResult};
pub use groups::generate_groups;
pub use report::{read_result, report, summarize, write_result, Summary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Signal(#[from] crate::signals::SignalError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Transfer(#[from] crate::transfer::TransferError),
    #[error(transparent)]
    Active(#[from] crate::active::ActiveError),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::EmptyTestSet => 2,
            _ => 1,
        }
    }
}
