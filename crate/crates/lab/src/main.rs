use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sqfn_lab::config::Config;
use sqfn_lab::experiments::{describe, EXPERIMENT_NAMES};

/// Numerical laboratory for intrinsic square functions: runs configured
/// inequality experiments and writes reproducible JSON/CSV reports.
#[derive(Parser)]
#[command(name = "sqfn-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a config file.
    Run {
        /// TOML config path
        config: PathBuf,
    },
    /// List the available experiments.
    List,
    /// Parse and validate a config file without running anything.
    Validate {
        /// TOML config path
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in EXPERIMENT_NAMES {
                println!("{name:28} {}", describe(name));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match Config::from_path(&config) {
            Ok(_) => {
                println!("ok: {}", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config } => {
            let cfg = match Config::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let base = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
            match sqfn_lab::runner::run(&cfg, &base) {
                Ok(outcome) => {
                    println!(
                        "report written to {} ({})",
                        outcome.report_path.display(),
                        if outcome.all_passed {
                            "all checks passed"
                        } else {
                            "some checks FAILED"
                        }
                    );
                    if outcome.all_passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
