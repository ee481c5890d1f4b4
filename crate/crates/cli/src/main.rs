//! `ddcds`: pricing, boundary solving, verification and figure data for
//! drawdown-triggered credit default swaps with a switch option.

mod figures;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drawdown_cds::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "ddcds", version, about = "Drawdown CDS pricing and verification")]
struct Cli {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true, env = "DDCDS_CONFIG")]
    config: Option<PathBuf>,

    /// Override one setting, e.g. `--set model.sigma=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value the outright contract, the switch option and their sum at `y`.
    Price {
        /// Current drawdown.
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long)]
        json: bool,
    },
    /// Solve for the optimal switch level and print its diagnostics.
    Boundary {
        #[arg(long)]
        json: bool,
    },
    /// Run the analytic and/or Monte Carlo verification suites.
    Verify(VerifyArgs),
    /// Write the figure data as CSV files.
    Figures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Analytic checks only (the default).
    #[arg(long, conflicts_with_all = ["mc", "all"])]
    analytic: bool,
    /// Monte Carlo checks only.
    #[arg(long, conflicts_with = "all")]
    mc: bool,
    /// Both suites.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    json: bool,
}

/// Failure categories mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid input, configuration or domain (exit 2).
    Usage(String),
    /// A verification check did not pass (exit 1).
    CheckFailed(Vec<String>),
}

impl From<drawdown_cds::Error> for CliError {
    fn from(e: drawdown_cds::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            log::info!("loading config from {}", path.display());
            RunConfig::from_path(path)?
        }
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        cfg.apply_override(assignment)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Price { y, json } => report::price(&cfg, *y, *json),
        Command::Boundary { json } => report::boundary(&cfg, *json),
        Command::Verify(args) => {
            let (analytic, mc) = if args.all {
                (true, true)
            } else if args.mc {
                (false, true)
            } else {
                (true, false)
            };
            verify::run(&cfg, analytic, mc, args.json)
        }
        Command::Figures { out } => figures::write_all(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::CheckFailed(failures)) => {
            eprintln!("verification failed:");
            for f in failures {
                eprintln!("  {f}");
            }
            ExitCode::from(1)
        }
    }
}
