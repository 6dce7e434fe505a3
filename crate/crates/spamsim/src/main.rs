//! Thin CLI over the experiment harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 config/validation error,
//! 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spamsim::experiments::{run_budget_with_compare, run_experiment, ExperimentName};
use spamsim::{load_config, validate_config, SimError};

#[derive(Parser)]
#[command(
    name = "spamsim",
    version,
    about = "SPAM simulator for exchange-only spin qubits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment from a config file.
    Run(RunArgs),
    /// Parse a config file and report every invariant violation.
    Validate { config: PathBuf },
    /// Assemble the error budget, optionally against an observed infidelity.
    Budget(BudgetArgs),
}

#[derive(Args)]
struct RunArgs {
    /// One of: snr-surface, spectroscopy, t1-map, init-sweep, mapping,
    /// blind-rb, exchange, budget.
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    config: PathBuf,
    /// Observed SPAM infidelity; the gap to the budget total is reported
    /// as missing error and inverted into an implied excitation energy.
    #[arg(long)]
    compare: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; help/version are successes.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                SimError::InvalidArgument(_) => 1,
                SimError::Config(_) => 2,
                _ => 3,
            })
        }
    }
}

fn dispatch(cli: Cli) -> spamsim::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let name: ExperimentName = args.experiment.parse()?;
            let mut config = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                config.run.seed = seed;
            }
            let out_dir = args
                .out
                .unwrap_or_else(|| PathBuf::from(&config.run.output_dir).join(name.as_str()));
            let summary = run_experiment(name, &config, &out_dir)?;
            println!("{}", summary.one_line);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let report = validate_config(&config)?;
            if report.is_clean() {
                println!("{}: ok", report.path);
                Ok(ExitCode::SUCCESS)
            } else {
                for v in &report.violations {
                    println!("{}: {v}", report.path);
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Budget(args) => {
            let config = load_config(&args.config)?;
            let out_dir = args
                .out
                .unwrap_or_else(|| PathBuf::from(&config.run.output_dir).join("budget"));
            std::fs::create_dir_all(&out_dir)?;
            let compare = args.compare.or(config.budget.compare_observed);
            let mut files = Vec::new();
            let summary = run_budget_with_compare(&config, &out_dir, &mut files, compare)?;
            println!("{}", summary.one_line);
            Ok(ExitCode::SUCCESS)
        }
    }
}
