//! Command-line scenario runner.
//!
//! `haps-spp run <scenario.toml> --out <dir>` executes one scenario and
//! writes `epochs.csv`, `cdf.csv` and `summary.csv`; `haps-spp compare
//! <scenario.toml>...` runs several system configurations over the same base
//! scenario and prints a percentile table.
//!
//! Exit codes: 0 on success, 2 on scenario validation failure, 3 on data
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use haps_spp::scenario::{
    compare_systems, run_scenario, write_comparison_csv, write_run_reports, Scenario,
    ScenarioError,
};

#[derive(Parser)]
#[command(name = "haps-spp", version, about = "GPS + HAPS single point positioning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the epoch solves.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write per-epoch, CDF, and summary CSV files.
    Run {
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run several scenarios sharing a trajectory/seed base and print a
    /// comparison table.
    Compare {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Optionally write the comparison table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, ScenarioError> {
    let mut scenario = Scenario::from_path(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn run(cli: Cli) -> Result<(), ScenarioError> {
    match cli.command {
        Command::Run { scenario, out, common } => {
            let scenario = load(&scenario, common.seed)?;
            let result = run_scenario(&scenario, common.threads)?;
            write_run_reports(&result, &out)?;
            if result.dropped_obs_epochs > 0 {
                eprintln!(
                    "warning: {} observation epoch(s) dropped by the RINEX parser",
                    result.dropped_obs_epochs
                );
            }
            let s = &result.summary;
            println!(
                "{} [{}] seed {}: {}/{} epochs converged ({:.1}%), median 3D {:.3} m, p95 {:.3} m, mean HDOP {:.3}",
                result.scenario_name,
                result.system,
                result.seed,
                s.converged,
                s.epochs,
                100.0 * s.convergence_rate,
                s.median_error_3d,
                s.p95_error_3d,
                s.mean_hdop,
            );
            println!("reports written to {}", out.display());
            Ok(())
        }
        Command::Compare { scenarios, out, common } => {
            let mut results = Vec::with_capacity(scenarios.len());
            for path in &scenarios {
                let scenario = load(path, common.seed)?;
                results.push(run_scenario(&scenario, common.threads)?);
            }
            let comparison = compare_systems(&results)?;
            print!("{comparison}");
            if let Some(out) = out {
                let mut buf = Vec::new();
                write_comparison_csv(&mut buf, &comparison)
                    .map_err(|source| ScenarioError::Io { path: out.clone(), source })?;
                std::fs::write(&out, &buf)
                    .map_err(|source| ScenarioError::Io { path: out.clone(), source })?;
                println!("comparison written to {}", out.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
