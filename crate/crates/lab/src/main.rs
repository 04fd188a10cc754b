use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use cmc_lab::suites::{cmd_identities, cmd_report, cmd_sweep, to_csv};
use cmc_lab::{FamilyConfig, PipelineOptions};
use cmc_rigidity::Error;

#[derive(Parser)]
#[command(name = "lab", about = "Rigidity diagnostics for almost-CMC spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every exact identity at the configured amplitudes.
    Identities {
        config: PathBuf,
        /// Perturb the mean curvature before the checks (negative control).
        #[arg(long = "corrupt-H")]
        corrupt_h: bool,
    },
    /// Run an amplitude sweep and fit scaling slopes.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the full diagnostics report for one amplitude.
    Report {
        config: PathBuf,
        #[arg(long)]
        t: f64,
    },
}

const PASS: u8 = 0;
const SUITE_FAILURE: u8 = 1;
const ERROR: u8 = 2;

fn load(path: &Path) -> Result<FamilyConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))?;
    FamilyConfig::from_json(&text)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Configuration(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Identities { config, corrupt_h } => {
            let config = load(&config)?;
            let outcome = cmd_identities(&config, PipelineOptions { corrupt_h })?;
            print_json(&outcome)?;
            Ok(outcome.pass)
        }
        Command::Sweep { config, out } => {
            let config = load(&config)?;
            let summary = cmd_sweep(&config)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::Configuration(format!("{}: {e}", out.display())))?;
            write(&out.join("sweep.csv"), &to_csv(&summary.rows))?;
            let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Configuration(e.to_string()))?;
            write(&out.join("summary.json"), &json)?;
            println!("{json}");
            Ok(summary.pass)
        }
        Command::Report { config, t } => {
            let config = load(&config)?;
            print_json(&cmd_report(&config, t)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(ERROR);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::from(PASS),
        Ok(false) => ExitCode::from(SUITE_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR)
        }
    }
}
