//! `nlos`: simulate scenarios, run the localization pipeline, evaluate and
//! report.
//!
//! Exit codes: 0 success, 1 user or validation error, 2 I/O error.
//! Set `NLOS_LOG` (e.g. `NLOS_LOG=debug`) to control logging.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "nlos",
    version,
    about = "Camera-assisted radar localization of hidden pedestrians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate sensor frames and ground truth for a scenario.
    Simulate(SimulateArgs),
    /// Run the pipeline over a recorded or simulated frame stream.
    Run(RunArgs),
    /// Score pipeline results against ground truth.
    Eval(EvalArgs),
    /// Aggregate evaluated runs into tables and SVG plots.
    Report(ReportArgs),
    /// Grid over one parameter, running every value for several seeds.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario JSON file, or a built-in name: SA, SB, SC.
    #[arg(long)]
    pub scenario: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gap between the parked vehicles (built-in scenarios only), meters.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Noise preset replacing the scenario's noise: `zero` or `benchmark`.
    #[arg(long)]
    pub noise: Option<String>,
    /// Warn about unknown JSON fields instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also write a dense static sampling recording under `reference/`.
    #[arg(long)]
    pub dense_reference: bool,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Pipeline config JSON; unspecified keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set target_eps=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Directory written by `simulate` (or an external recording).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory written by `run`.
    #[arg(long)]
    pub run: PathBuf,
    /// Ground-truth JSONL written by `simulate`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directories written by `eval`.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// `gap`, `noise.<field>`, `sensor.<field>` or a pipeline config key.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<String>,
    /// Number of seeds per value, starting from the scenario seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Also run the dense reference to fill reference spatial errors.
    #[arg(long)]
    pub dense_reference: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NLOS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Run(a) => commands::run(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Report(a) => commands::report(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Environment(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
