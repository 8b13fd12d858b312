//! `qident`: run simulations and analyses, write CSV.
//!
//! Exit status is 0 on success, 1 when a protocol run aborted or a test
//! vector failed, 2 on any error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{dispatch, CliError, Command, Extras};
use config::{parse_config, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "qident", version, about = "Identification and key refuelling simulator")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Test-vector file written by auth-tag, read by auth-verify.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// simulate-qkd: per-pulse transcript of the first run.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = load(cli)?;
    let extras = Extras {
        vectors: cli.vectors.clone(),
        dump: cli.dump.clone(),
    };
    let report = dispatch(cli.command, &cfg, &extras)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &report.csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{}", report.csv),
    }
    Ok(report.aborted)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qident: {e}");
            ExitCode::from(2)
        }
    }
}
