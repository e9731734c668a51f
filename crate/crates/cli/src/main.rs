use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use phlab_cli::config::{parse_f64_list, CommonSettings, ConfigFile};
use phlab_cli::report::Outcome;
use phlab_cli::{boundary_cmd, cordes_cmd, estimate_cmd, identities_cmd, solve_cmd};

/// Numerical laboratory for second-order estimates of regularized
/// p-harmonic minimizers.
#[derive(Parser)]
#[command(name = "phlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file (plain-text key=value sections)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; reruns with the same seed produce byte-identical CSVs
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV and SVG reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid sizes, comma separated (overrides the config)
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// ε sequence, comma separated and strictly decreasing
    #[arg(long = "eps-list")]
    eps_list: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized sweeps of the matrix gap inequalities
    VerifyCordes(CommonArgs),
    /// Identity residual refinement studies and inequality slack budgets
    VerifyIdentities(CommonArgs),
    /// Solve one Dirichlet problem and export solution, history and norms
    Solve(CommonArgs),
    /// Boundary curvature, capacity, rearrangement and trace checks
    BoundarySuite(CommonArgs),
    /// Gradient-norm ratio across the ε-sequence on disk and square
    GlobalEstimate(CommonArgs),
}

fn load(common: &CommonArgs) -> Result<(ConfigFile, CommonSettings, Option<Vec<f64>>)> {
    let cfg = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let settings = CommonSettings::from_config(&cfg, common.seed, common.out.clone())?;
    let eps = match &common.eps_list {
        Some(raw) => Some(parse_f64_list(raw)?),
        None => None,
    };
    Ok((cfg, settings, eps))
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::VerifyCordes(common) => {
            let (cfg, settings, _) = load(common)?;
            let cordes = cordes_cmd::CordesSettings::from_config(&cfg, settings.seed)?;
            cordes_cmd::run(&cordes, &settings.out_dir)
        }
        Command::VerifyIdentities(common) => {
            let (cfg, settings, _) = load(common)?;
            let mut ids = identities_cmd::IdentitySettings::from_config(&cfg)?;
            if let Some(grids) = &common.grid {
                ids.grids = grids.clone();
                ids.slack_grids = grids.clone();
            }
            identities_cmd::run(&ids, settings.seed, &settings.out_dir)
        }
        Command::Solve(common) => {
            let (cfg, settings, eps) = load(common)?;
            let solve = solve_cmd::SolveSettings::from_config(&cfg, common.grid.clone(), eps)?;
            solve_cmd::run(&solve, &settings.out_dir)
        }
        Command::BoundarySuite(common) => {
            let (cfg, settings, _) = load(common)?;
            let boundary = boundary_cmd::BoundarySettings::from_config(&cfg, settings.seed)?;
            boundary_cmd::run(&boundary, &settings.out_dir)
        }
        Command::GlobalEstimate(common) => {
            let (cfg, settings, eps) = load(common)?;
            let est = estimate_cmd::EstimateSettings::from_config(&cfg, common.grid.clone(), eps)?;
            estimate_cmd::run(&est, &settings.out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match dispatch(&cli.command) {
        Ok(outcome) => {
            outcome.print();
            println!("elapsed: {:.2?}", start.elapsed());
            if outcome.all_pass() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} budget(s) failed", outcome.failures().len());
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
