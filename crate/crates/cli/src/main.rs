//! `rankz`: generate least-squares problems, solve them, run experiment suites.
//!
//! Exit codes: 0 success, 2 iteration budget exhausted, 3 input error,
//! 4 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rankz_bench::Suite;
use rankz_core::sampling::parse_seed;
use rankz_core::{Algorithm, EnsembleKind};

#[derive(Parser, Debug)]
#[command(name = "rankz", version, about = "Randomized CD / Kaczmarz least-squares solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random problem with its reference solution.
    Gen(GenArgs),
    /// Solve a problem written by `gen`.
    Solve(SolveArgs),
    /// Run an ensemble experiment.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct SeedArg {
    /// Decimal or 0x-prefixed hex.
    #[arg(long, env = "RANKZ_SEED", value_parser = parse_seed, default_value = "0")]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    kind: EnsembleKind,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Fraction of nonzeros (sparse).
    #[arg(long, default_value_t = 0.25)]
    density: f64,
    /// Rank (rankdef).
    #[arg(long)]
    r: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    eps_cd: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_k: f64,
    /// First-stage CD tolerance of cd+ek+k; defaults to 1e3 * eps-cd.
    #[arg(long)]
    eps_cd_hat: Option<f64>,
    /// Criterion cadence; defaults to 8 min(m, n).
    #[arg(long)]
    check_every: Option<u64>,
    /// Checkpoint stride.
    #[arg(long)]
    trace_every: Option<u64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Problem directory.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Directory for `trace.csv` and `x.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Preset ensemble: fig1, fig2, fig3 or fig4.
    #[arg(long, conflicts_with_all = ["kind", "m", "n", "r"])]
    suite: Option<Suite>,
    /// Multiplies the preset's m, n and r, rounding up.
    #[arg(long, default_value_t = 1.0, requires = "suite")]
    scale: f64,
    #[arg(long, requires_all = ["m", "n"])]
    kind: Option<EnsembleKind>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    density: f64,
    #[arg(long)]
    r: Option<usize>,
    /// Comma-separated subset of cd,k,ek,cd+k,cd+ek+k.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Algorithm>>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    max_iters: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Stop each run at its criteria instead of running to the budget.
    #[arg(long)]
    stop: bool,
    /// Share recorded column sequences between cd and ek.
    #[arg(long)]
    coupled: bool,
    /// Add bound columns.
    #[arg(long)]
    bounds: bool,
    /// Write `series,k,value` rows.
    #[arg(long)]
    long: bool,
    /// Fig4 protocol: CD iterations before EK.
    #[arg(long = "fig4-n")]
    fig4_n: Option<u64>,
    /// Fig4 protocol: EK iterations; defaults to the CD count.
    #[arg(long = "fig4-ek")]
    fig4_ek: Option<u64>,
    /// Fig4 protocol: Kaczmarz iterations per method.
    #[arg(long = "fig4-horizon")]
    fig4_horizon: Option<u64>,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Budget,
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Budget => 2,
            Failure::Input(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<rankz_core::Error> for Failure {
    fn from(e: rankz_core::Error) -> Self {
        match e {
            rankz_core::Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<rankz_bench::BenchError> for Failure {
    fn from(e: rankz_bench::BenchError) -> Self {
        use rankz_bench::BenchError;
        match e {
            BenchError::Io { .. } => Failure::Io(e.to_string()),
            BenchError::Core(c) => c.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Solve(args) => commands::solve(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Budget => {}
                Failure::Input(msg) | Failure::Io(msg) => eprintln!("rankz: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
