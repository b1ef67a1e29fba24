//! `brc`: reliability analysis of coherent networked systems by adaptive
//! decomposition, with exact, bounded, or sampling-backed estimates and
//! fast probability updates under new component distributions.

mod commands;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::Settings;

#[derive(Parser)]
#[command(
    name = "brc",
    about = "Reliability analysis of coherent systems by branch decomposition",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full analysis and write result/rules/branches artifacts.
    Analyze(AnalyzeArgs),
    /// Recompute an existing artifact under a new component distribution
    /// (no system-function calls).
    Update(UpdateArgs),
    /// Analyze several thresholds on the system's performance metric,
    /// re-using evaluations across rounds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonSettings {
    /// Relative unknown-mass threshold for the bound-convergence exit.
    #[arg(long, default_value_t = 0.05)]
    epsilon_u: f64,
    /// Branch-count limit before switching to hybrid sampling (0 = unbounded).
    #[arg(long, default_value_t = 50_000)]
    max_branches: usize,
    /// Target coefficient of variation for hybrid sampling.
    #[arg(long, default_value_t = 0.01)]
    target_cov: f64,
    /// Beta prior parameters for hybrid sampling.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Sample budget for hybrid sampling.
    #[arg(long, default_value_t = 1_000_000)]
    max_samples: usize,
    /// RNG seed; required whenever hybrid sampling runs.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonSettings {
    fn settings(&self) -> Settings {
        Settings {
            epsilon_u: self.epsilon_u,
            max_branches: (self.max_branches > 0).then_some(self.max_branches),
            target_cov: self.target_cov,
            alpha: self.alpha,
            beta: self.beta,
            max_samples: self.max_samples,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Network description (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Hazard scenario overriding the network file's inline scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output artifact directory.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    common: CommonSettings,
}

#[derive(Args)]
struct UpdateArgs {
    /// Artifact directory from a previous analyze run.
    #[arg(long)]
    artifact: PathBuf,
    /// New network file carrying the new component distribution.
    #[arg(long)]
    network: Option<PathBuf>,
    /// New hazard scenario applied to the artifact's original network.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// Comma-separated thresholds on the performance metric.
    #[arg(long, value_delimiter = ',', required = true)]
    thresholds: Vec<f64>,
    #[command(flatten)]
    common: CommonSettings,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => commands::analyze(
            &args.network,
            args.scenario.as_deref(),
            &args.out,
            &args.common.settings(),
        ),
        Command::Update(args) => commands::update(
            &args.artifact,
            args.network.as_deref(),
            args.scenario.as_deref(),
        ),
        Command::Sweep(args) => commands::sweep(
            &args.network,
            args.scenario.as_deref(),
            &args.out,
            &args.thresholds,
            &args.common.settings(),
        ),
    }
}

/// Exit codes: 0 success, 1 input error, 2 coherency violation, 3 runtime
/// failure.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<brc_core::Error>() {
        return match core {
            brc_core::Error::Coherency { .. } => 2,
            brc_core::Error::SystemFunction(_) | brc_core::Error::UnboundedWeight { .. } => 3,
            _ => 1,
        };
    }
    if err
        .chain()
        .any(|c| c.to_string().starts_with("cannot write"))
    {
        return 3;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
