use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use arpfb::dynamics::calibration::fit_pump_pattern;
use arpfb::dynamics::EngineKind;
use arpfb::harness::{run_scenario, write_outputs, HarnessError, Scenario, ScenarioKind, SimConfig};

#[derive(Parser)]
#[command(name = "arpfb", version, about = "Swept-microwave state transfer with edge-counting feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv, record.json and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// staircase | closed-loop | open-loop-stop | monte-carlo |
        /// adiabaticity-scan | stern-gerlach
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured trial count.
        #[arg(long)]
        trials: Option<u32>,
        /// Override the configured engine: lz | ode.
        #[arg(long)]
        engine: Option<EngineKind>,
    },
    /// Parse and check a config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Refit the probe back-action pattern and print it as JSON.
    Calibrate,
}

fn load(path: &Path) -> Result<SimConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
    SimConfig::from_json(&text)
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            scenario,
            seed,
            out,
            trials,
            engine,
        } => {
            let mut cfg = load(&config)?;
            if let Some(n) = trials {
                cfg.trials = n;
            }
            if let Some(e) = engine {
                cfg.engine = e;
            }
            cfg.validate()?;
            let sc = Scenario {
                kind: scenario,
                config: cfg,
                seed,
            };
            let result = run_scenario(&sc)?;
            for f in write_outputs(&result, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Validate { config } => {
            load(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Calibrate => {
            let fit = fit_pump_pattern().map_err(HarnessError::simulation)?;
            let text = serde_json::to_string_pretty(&fit).map_err(HarnessError::simulation)?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("arpfb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
