//! `ordmed`: mediation analysis for an ordinal outcome and a binary mediator.

mod commands;
mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "ordmed",
    version,
    about = "Natural direct and indirect effects for an ordinal outcome"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the effect table for given model parameters.
    Effects(EffectsArgs),
    /// Fit both models to a dataset.
    Fit(FitArgs),
    /// Fit, compute effects and bootstrap intervals.
    Analyze(AnalyzeArgs),
    /// Simulate a dataset from a design.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study over simulated datasets.
    McStudy(McStudyArgs),
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct QueryArgs {
    /// Exposure level of interest.
    #[arg(long)]
    pub x: f64,
    /// Reference exposure level.
    #[arg(long)]
    pub xstar: f64,
    /// Covariate values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct EffectsArgs {
    /// JSON parameter file (gamma0, gammaX, gammaC, alpha, betaX, betaM, betaXM, betaC).
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// CSV with header x,m,y[,c1..cp].
    #[arg(long)]
    pub data: PathBuf,
    /// Number of outcome levels J; defaults to the largest observed level.
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    /// Bootstrap samples; 0 reports point estimates only.
    #[arg(long, default_value_t = ordmed::inference::DEFAULT_RESAMPLES)]
    pub bootstrap: usize,
    /// Confidence level of the percentile intervals.
    #[arg(long, default_value_t = ordmed::inference::DEFAULT_LEVEL)]
    pub level: f64,
    /// Seed for resampling; required unless --bootstrap 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// J = 3 design with alpha = (2.5, 5.5).
    ThreeLevel,
    /// J = 5 design with alpha = (0.5, 2.5, 4.5, 5.5).
    FiveLevel,
    /// Sparse J = 5 design, n = 300.
    Sparse,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct DesignArgs {
    #[arg(long, value_enum, default_value = "three-level")]
    pub design: Preset,
    /// Replace the preset's models with those in a JSON parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mean_x: Option<f64>,
    #[arg(long)]
    pub sd_x: Option<f64>,
    /// Means of independent normal covariates, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub cov_means: Vec<f64>,
    /// Standard deviations of the covariates, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub cov_sds: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Output CSV; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct McStudyArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub replications: usize,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// CSV of every replicate's estimates (csv format only).
    #[arg(long)]
    pub estimates: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Effects(a) => commands::effects(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::McStudy(a) => commands::mc_study(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
