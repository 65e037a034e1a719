//! Command-line front end for `mimo-converge`: configuration layering,
//! figure presets and CSV/JSON emission.

pub mod config;
pub mod output;
pub mod presets;

use std::path::PathBuf;

use mimo_converge::montecarlo::{run_scenario_with, Execution, SweepResult};
use thiserror::Error;

pub use config::{parse_config, resolve, Format, RunConfig, Settings};
pub use output::{emit, parse_json, records, render, OutputRecord};
pub use presets::Preset;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<mimo_converge::Error> for CliError {
    fn from(e: mimo_converge::Error) -> Self {
        use mimo_converge::Error as E;
        match e {
            E::Config(_) | E::InvalidArgument(_) => CliError::Config(e.to_string()),
            E::Singular(_) | E::NotPositiveSemidefinite { .. } | E::Numerical { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

/// Runs every scenario of the configuration in order.
pub fn run(config: &RunConfig) -> Result<Vec<SweepResult>, CliError> {
    let exec = config.workers.map(Execution::Workers).unwrap_or(Execution::Parallel);
    // Validate all scenarios before spending time on any of them.
    for s in &config.scenarios {
        s.points()?;
    }
    config
        .scenarios
        .iter()
        .map(|s| run_scenario_with(s, exec).map_err(CliError::from))
        .collect()
}
