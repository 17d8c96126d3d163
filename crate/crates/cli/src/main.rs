//! `mivt` command-line tool.

mod commands;

use clap::{Args, Parser, Subcommand};
use mivt::{SeedFamily, TrawlFamily};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "mivt", version, about = "Simulate and fit multivariate integer-valued trawl processes")]
struct Cli {
    /// Worker threads for simulation and resampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count event timestamps in half-open bins.
    Bin(BinArgs),
    /// Simulate a path from a model file.
    Simulate(SimulateArgs),
    /// Fit trawl and seed parameters to a counts file.
    Fit(FitArgs),
    /// Export sample autocorrelations and summary statistics.
    Acf(AcfArgs),
    /// Attach parametric bootstrap intervals to a fit report.
    Bootstrap(BootstrapArgs),
    /// Simulate-and-refit Monte Carlo study at a known model.
    McStudy(McStudyArgs),
}

#[derive(Debug, Args)]
pub struct BinArgs {
    /// Comma-separated events CSV files (header `timestamp`), one per component.
    #[arg(long, value_delimiter = ',', required = true)]
    pub events: Vec<PathBuf>,
    /// Bin width in seconds.
    #[arg(long)]
    pub delta: f64,
    /// Window start in seconds.
    #[arg(long)]
    pub start: f64,
    /// Window end in seconds; a trailing partial bin is dropped.
    #[arg(long)]
    pub end: f64,
    /// Component labels (default: file stems).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Keep the time column in seconds (right bin edges) instead of bin indices 1..K.
    #[arg(long)]
    pub seconds: bool,
    /// Output counts CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Burnin {
    Auto,
    Fixed(f64),
}

fn parse_burnin(s: &str) -> Result<Burnin, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Burnin::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(Burnin::Fixed(v)),
        _ => Err(format!("expected 'auto' or a non-negative duration, got '{s}'")),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model JSON: {"trawls": [...], "seed": {...}}.
    #[arg(long)]
    pub model: PathBuf,
    /// Grid step.
    #[arg(long)]
    pub delta: f64,
    /// Length of the returned path in time units.
    #[arg(long)]
    pub horizon: f64,
    /// Burn-in duration, or `auto` for the 1e-6 trawl-mass rule.
    #[arg(long, value_parser = parse_burnin, default_value = "auto")]
    pub burnin: Burnin,
    /// Trawl cutoff below which jumps are pruned.
    #[arg(long, default_value_t = mivt::simulate::DEFAULT_EPS_CUT)]
    pub eps_cut: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output counts CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    /// Comma-separated trawl families, one per component (exp, supig, gamma, gig, seasonal).
    #[arg(long, value_delimiter = ',', required = true)]
    pub trawl: Vec<TrawlFamily>,
    /// Seed family: nb-common, nb-common-idio, nb-independent or poisson-factor.
    #[arg(long)]
    pub seed_model: SeedFamily,
    /// Factor matrix for poisson-factor as JSON rows, e.g. '[[1,0,1],[0,1,1]]'.
    #[arg(long)]
    pub factor_matrix: Option<String>,
    /// ACF lags used in the trawl fit.
    #[arg(long, default_value_t = mivt::infer::DEFAULT_LAGS)]
    pub lags: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Counts CSV with header `t,<labels>`.
    #[arg(long)]
    pub counts: PathBuf,
    #[command(flatten)]
    pub template: TemplateArgs,
    /// Output report JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AcfArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long, default_value_t = mivt::infer::DEFAULT_LAGS)]
    pub lags: usize,
    /// Add model autocorrelations from a fit report as `<label>_model` columns.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Write per-component summary statistics as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Output CSV `lag,<labels>` (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// Fit report JSON produced by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McStudyArgs {
    /// True model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub n_obs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = mivt::infer::DEFAULT_LAGS)]
    pub lags: usize,
    #[arg(long)]
    pub seed: u64,
    /// Per-replicate estimates as CSV.
    #[arg(long)]
    pub estimates: Option<PathBuf>,
    /// Study JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Bin(a) => commands::bin(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Acf(a) => commands::acf(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::McStudy(a) => commands::mc_study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
