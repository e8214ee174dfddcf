//! `odbayes`: Bayesian OD matrix estimation from margin data.
//!
//! Subcommands:
//! - `furness`: deterministic margin balancing (the MAP estimate);
//! - `calibrate`: solve the deterrence parameter for a target mean cost;
//! - `sample`: run an MCMC chain and write summaries;
//! - `summarize`: recompute summaries from a stored draws file.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 model
//! infeasibility.

mod commands;
mod config;
mod io;
mod summary;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "odbayes", version, about = "Bayesian OD matrix estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Balance a trip matrix to the margins (iterative proportional fitting).
    Furness(FurnessArgs),
    /// Find the deterrence parameter matching a target mean proportion cost.
    Calibrate(CalibrateArgs),
    /// Run an MCMC chain over consistent trip matrices.
    Sample(SampleArgs),
    /// Recompute summaries from a draws.bin file.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct FurnessArgs {
    /// Margins CSV with header zone,origin,destination.
    #[arg(long)]
    margins: PathBuf,
    /// Headerless n x n proportions grid.
    #[arg(long)]
    proportions: Option<PathBuf>,
    /// Headerless n x n cost grid (used with --beta).
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Gravity deterrence parameter for --costs.
    #[arg(long)]
    beta: Option<f64>,
    /// Convergence tolerance on the relative margin residual.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Headerless n x n cost grid.
    #[arg(long)]
    costs: PathBuf,
    /// Target mean proportion cost.
    #[arg(long)]
    target_cost: f64,
    /// Tolerance on the achieved mean cost.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Output directory for run.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// All keys can also be given in a `--config` file as `key=value` lines
/// (using the long flag names); command line flags win.
#[derive(Args, Default, Clone)]
struct SampleArgs {
    /// key=value configuration file; # starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model: fixed-p, dirichlet-seed, or beta-tld.
    #[arg(long)]
    model: Option<String>,
    /// Margins CSV with header zone,origin,destination.
    #[arg(long)]
    margins: Option<PathBuf>,
    /// Headerless n x n cost grid.
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Headerless n x n proportions grid (fixed-p).
    #[arg(long)]
    proportions: Option<PathBuf>,
    /// Gravity deterrence for fixed-p proportions from costs.
    #[arg(long)]
    beta: Option<f64>,
    /// Headerless n x n seed trip grid (dirichlet-seed).
    #[arg(long)]
    seed_matrix: Option<PathBuf>,
    /// TLD CSV with header lower,upper,count (beta-tld).
    #[arg(long)]
    tld: Option<PathBuf>,
    /// Dirichlet pseudo-counts: a scalar broadcast or a path to a grid.
    #[arg(long)]
    pi: Option<String>,
    /// Comma-separated cost bin edges, e.g. 0,4,8,12.
    #[arg(long)]
    bins: Option<String>,
    /// Post-burn-in draws to record.
    #[arg(long)]
    samples: Option<usize>,
    /// Burn-in sweeps (default 10 n^2).
    #[arg(long)]
    burnin: Option<usize>,
    /// Sweeps per recorded draw.
    #[arg(long)]
    thin: Option<usize>,
    /// RNG seed; chain k uses seed + k.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Variance of the deterrence proposal.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Credibility level for intervals.
    #[arg(long)]
    gamma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent chains.
    #[arg(long)]
    chains: Option<usize>,
    /// Write draws.bin alongside the summaries.
    #[arg(long)]
    emit_draws: bool,
    /// Cost thresholds for exceedance probabilities (repeatable).
    #[arg(long)]
    cost_threshold: Vec<f64>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Path to a draws.bin file produced by `sample --emit-draws`.
    #[arg(long)]
    draws: PathBuf,
    /// Credibility level for intervals.
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    /// Headerless n x n cost grid, for cost and TLD summaries.
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Comma-separated cost bin edges.
    #[arg(long)]
    bins: Option<String>,
    /// Headerless n x n proportions grid (fixed-p reference shares).
    #[arg(long)]
    proportions: Option<PathBuf>,
    /// Gravity deterrence for reference shares from costs.
    #[arg(long)]
    beta: Option<f64>,
    /// Cost thresholds for exceedance probabilities (repeatable).
    #[arg(long)]
    cost_threshold: Vec<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Furness(args) => commands::furness(args).map_err(|e| (2, e)),
        Command::Calibrate(args) => commands::calibrate(args).map_err(|e| (2, e)),
        Command::Sample(args) => commands::sample(args),
        Command::Summarize(args) => commands::summarize(args).map_err(|e| (2, e)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
