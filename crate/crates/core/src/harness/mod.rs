//! Scenario orchestration: open and closed loop runs, Monte-Carlo batches,
//! the adiabaticity scan and the Stern-Gerlach readout.

mod config;
mod output;
mod run;

use std::fmt;

use thiserror::Error;

pub use config::{FieldSpec, OdeSettings, OpenLoopStop, ScanConfig, SimConfig};
pub use output::{write_outputs, TRACE_HEADER};
pub use run::{
    run_adiabaticity_scan, run_closed_loop, run_monte_carlo, run_open_loop, run_scenario,
    run_stern_gerlach, simulate_trial, trial_seed, Mode, MonteCarloSummary, RunOutput, RunRecord,
    ScanRow, Stats, TraceRow, TrialOutcome, TrialSummary,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn config(e: impl fmt::Display) -> Self {
        HarnessError::Config(e.to_string())
    }

    pub fn simulation(e: impl fmt::Display) -> Self {
        HarnessError::Simulation(e.to_string())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Simulation(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Staircase,
    ClosedLoop,
    OpenLoopStop,
    MonteCarlo,
    AdiabaticityScan,
    SternGerlach,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Staircase,
        ScenarioKind::ClosedLoop,
        ScenarioKind::OpenLoopStop,
        ScenarioKind::MonteCarlo,
        ScenarioKind::AdiabaticityScan,
        ScenarioKind::SternGerlach,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Staircase => "staircase",
            ScenarioKind::ClosedLoop => "closed_loop",
            ScenarioKind::OpenLoopStop => "open_loop_stop",
            ScenarioKind::MonteCarlo => "monte_carlo",
            ScenarioKind::AdiabaticityScan => "adiabaticity_scan",
            ScenarioKind::SternGerlach => "stern_gerlach",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

/// A configured run: what to do, with which settings, from which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub config: SimConfig,
    pub seed: u64,
}
