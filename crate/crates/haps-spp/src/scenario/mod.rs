//! Declarative scenarios and the epoch loop behind the CLI.
//!
//! A scenario file describes everything a run needs: mode (simulation or
//! experiment), master seed, receiver trajectory, ranging sources, error
//! models, environment timeline, and solver configuration. Loading validates
//! the description into a [`Scenario`]; [`run_scenario`] executes it into a
//! [`RunResult`]; the report helpers turn results into plot-ready CSV.

mod config;
mod report;
mod run;

pub use config::{ExperimentInputs, Mode, Scenario, TimeGrid};
pub use report::{
    write_cdf_csv, write_comparison_csv, write_epoch_csv, write_run_reports, write_summary_csv,
    Comparison, ComparisonRow,
};
pub use run::{
    compare_systems, run_scenario, CompareKey, EpochRecord, EpochStatus, RunResult, RunSummary,
};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

use crate::rinex::RinexError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Rinex(#[from] RinexError),
    #[error("data error: {0}")]
    Data(String),
    #[error("scenarios not comparable: {0}")]
    Mismatch(String),
}

impl ScenarioError {
    /// Exit code the CLI maps this error to: 2 for scenario/validation
    /// problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse(_) | ScenarioError::Validation(_) | ScenarioError::Mismatch(_) => 2,
            ScenarioError::Io { .. } | ScenarioError::Rinex(_) | ScenarioError::Data(_) => 3,
        }
    }
}

/// The four ranging-source configurations under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemConfiguration {
    GpsOnly,
    OneHapsGps,
    FourHapsGps,
    FourHapsOnly,
}

impl SystemConfiguration {
    pub fn uses_gps(&self) -> bool {
        !matches!(self, SystemConfiguration::FourHapsOnly)
    }

    pub fn required_haps(&self) -> usize {
        match self {
            SystemConfiguration::GpsOnly => 0,
            SystemConfiguration::OneHapsGps => 1,
            SystemConfiguration::FourHapsGps | SystemConfiguration::FourHapsOnly => 4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SystemConfiguration::GpsOnly => "gps_only",
            SystemConfiguration::OneHapsGps => "one_haps_gps",
            SystemConfiguration::FourHapsGps => "four_haps_gps",
            SystemConfiguration::FourHapsOnly => "four_haps_only",
        }
    }

    pub fn all() -> [SystemConfiguration; 4] {
        [
            SystemConfiguration::GpsOnly,
            SystemConfiguration::OneHapsGps,
            SystemConfiguration::FourHapsGps,
            SystemConfiguration::FourHapsOnly,
        ]
    }
}

impl std::fmt::Display for SystemConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
