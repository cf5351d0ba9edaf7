//! `coexbal` command-line front-end.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 I/O, 4 parse or
//! schema, 5 precondition. Failures print one JSON line on stderr.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "coexbal", version, about = "SFC partitioning, runtime-feedback balancing and co-execution modeling")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    log_level: LogLevel,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic partition mesh (pmesh) or, with --full, a node/connectivity mesh (JSON).
    GenMesh(GenMeshArgs),
    /// Partition a mesh along the Hilbert curve.
    Partition(PartitionArgs),
    /// Run the iterative balancing loop against a simulated or measured timer.
    Balance(BalanceArgs),
    /// Evaluate the co-execution efficiency model.
    Efficiency(EfficiencyArgs),
    /// Time packed mass-matrix assembly over pack sizes.
    BenchAssembly(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenMeshArgs {
    /// Output mesh file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub elements: usize,
    /// Proportions of tet,pyr,pri,hex.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.25, 0.25, 0.25])]
    pub mix: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Profile::Uniform)]
    pub profile: Profile,
    /// Write a structured tet/hex mesh of the unit cube with connectivity instead.
    #[arg(long)]
    pub full: bool,
    /// Cells per axis (with --full).
    #[arg(long, value_delimiter = ',', default_values_t = [8, 8, 8])]
    pub dims: Vec<usize>,
    /// Fraction of cells split into tetrahedra (with --full).
    #[arg(long, default_value_t = 0.5)]
    pub tet_fraction: f64,
    /// Interior node displacement in cell sizes, at most 0.25 (with --full).
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Gauss points per tetrahedron, 1 or 4 (with --full).
    #[arg(long, default_value_t = 4)]
    pub tet_rule: u32,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Uniform,
    Clustered,
}

#[derive(Debug, Args, Serialize)]
pub struct PartitionArgs {
    /// Partition mesh (pmesh) or node/connectivity mesh (JSON).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub parts: usize,
    /// JSON file `{"lambda": [...]}`; defaults to all ones.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    /// Hilbert refinement level.
    #[arg(long, default_value_t = 8)]
    pub level: u32,
    /// Key-space chunks scanned in parallel; does not change the result.
    #[arg(long, default_value_t = 1)]
    pub chunks: usize,
    /// Output partition file; `.cuts.json` and `.manifest.json` siblings are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BalanceArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Execution plan JSON; its rank count sets the number of parts.
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value_t = Regression::Wlr)]
    pub regression: Regression,
    #[arg(long, default_value_t = coexbal::balance::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = coexbal::balance::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = coexbal::balance::DEFAULT_WLR_GROWTH)]
    pub wlr_growth: f64,
    #[arg(long, default_value_t = 8)]
    pub level: u32,
    #[arg(long, value_enum, default_value_t = Timer::Sim)]
    pub timer: Timer,
    /// Pack size for the bench timer.
    #[arg(long, default_value_t = 32)]
    pub pack_size: usize,
    /// Report JSON; `.csv` and `.part` siblings hold the convergence table and final partition.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regression {
    Slr,
    Wlr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Timer {
    /// Device-model simulator driven by the plan.
    Sim,
    /// Measured assembly time per subdomain over the plan's throughput (needs a JSON mesh).
    Bench,
}

#[derive(Debug, Args, Serialize)]
pub struct EfficiencyArgs {
    /// GPU throughput in single-core equivalents.
    #[arg(long)]
    pub speedup: Option<f64>,
    /// GPUs per core; several values are allowed with --sweep.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["cores", "gpus"])]
    pub ratio: Vec<f64>,
    #[arg(long, requires = "gpus")]
    pub cores: Option<u32>,
    #[arg(long, requires = "cores")]
    pub gpus: Option<u32>,
    /// Host cores idled per GPU rank.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub cores_per_gpu: u32,
    /// Speedup range `LO..HI`, swept in unit steps, printed as CSV.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Also write the result (JSON, or CSV with --sweep) plus a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Node/connectivity mesh (JSON).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16, 32, 64])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Sweep CSV; the manifest sibling records the matrix checksum.
    #[arg(long)]
    pub out: PathBuf,
}

fn init_logging(level: LogLevel) {
    let filter = match level {
        LogLevel::Error => log::LevelFilter::Error,
        LogLevel::Warn => log::LevelFilter::Warn,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("COEXBAL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("COEXBAL_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(error::Kind::Other, e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    let seed = cli.seed;
    match cli.command {
        Command::GenMesh(a) => commands::gen_mesh(&a, seed),
        Command::Partition(a) => commands::partition(&a, seed),
        Command::Balance(a) => commands::balance(&a, seed),
        Command::Efficiency(a) => commands::efficiency(&a, seed),
        Command::BenchAssembly(a) => commands::bench_assembly(&a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return CliError::usage(first.trim_start_matches("error: ")).report();
        }
    };
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
