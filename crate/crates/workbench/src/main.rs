use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fekete_workbench::config::Overrides;
use fekete_workbench::{run, ExperimentConfig, Subcommand};

/// Batch experiments on weighted Fekete points, Gram matrices and
/// Bergman functions.
#[derive(Parser)]
#[command(name = "fekete", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Subcommand,
    /// Flat `key = value` config file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    cfg.apply(&cli.overrides);
    match run(cli.cmd, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
