//! `gnwood`: meshes, surveys, synthetic data, inversions and solver studies for 2D ERT.
//!
//! Exit codes: 0 on success, 2 for usage errors, 1 for runtime failures.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Thread count for the internal pool; all cores when unset.
const THREADS_VAR: &str = "GNWOOD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gnwood", version, about = "Gauss-Newton ERT inversion with Woodbury-preconditioned MINRES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Half-disk mesh refined around the electrodes.
    Mesh(MeshArgs),
    /// Pole-dipole survey on the electrodes of a mesh.
    Survey(SurveyArgs),
    /// Homogeneous or checkerboard model on a mesh.
    Model(ModelArgs),
    /// Synthetic observations on a once-refined copy of the mesh.
    Forward(ForwardArgs),
    /// Gauss-Newton inversion.
    Invert(InvertArgs),
    /// Iteration counts and timings over several electrode counts.
    Bench(BenchArgs),
    /// Eigenvalues of the ideally preconditioned saddle-point operator.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct MeshArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    nele: u32,
    #[arg(long, default_value_t = 80.0, value_parser = positive)]
    radius: f64,
    #[arg(long, num_args = 2, value_names = ["XMIN", "XMAX"], allow_negative_numbers = true, default_values_t = [-50.0, 50.0])]
    extent: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SurveyArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Homogeneous,
    Checkerboard,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Checkerboard)]
    kind: ModelKind,
    /// Background resistivity in Ω·m.
    #[arg(long, default_value_t = 3500.0, value_parser = positive)]
    resistivity: f64,
    /// Anomaly resistivity of the checkerboard in Ω·m.
    #[arg(long, default_value_t = 7000.0, value_parser = positive)]
    anomaly: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ForwardArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    survey: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Direct,
    Woodbury,
    Laplace,
}

impl From<AlgoArg> for gnwood::Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Direct => gnwood::Algorithm::Direct,
            AlgoArg::Woodbury => gnwood::Algorithm::WoodburyMinres,
            AlgoArg::Laplace => gnwood::Algorithm::LaplaceMinres,
        }
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    beta: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    steps: u32,
    /// Relative Euclidean MINRES tolerance.
    #[arg(long, default_value_t = 1e-7, value_parser = positive)]
    tol: f64,
}

#[derive(Debug, Args)]
struct InvertArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    survey: PathBuf,
    #[arg(long)]
    obs: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoArg::Woodbury)]
    algo: AlgoArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result JSON with the final model and per-step diagnostics.
    #[arg(long)]
    out: PathBuf,
    /// Per-step CSV report.
    #[arg(long)]
    report: PathBuf,
    /// Run manifest; defaults to the result path with a `.manifest.json` suffix.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [17, 33, 65])]
    nele: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AlgoArg::Woodbury, AlgoArg::Laplace])]
    algos: Vec<AlgoArg>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Mesh file; a unit-square mesh of `--nx` by `--nz` squares otherwise.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    nx: usize,
    #[arg(long, default_value_t = 6)]
    nz: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    beta: f64,
    /// Rows of the random Jacobian; 0 gives the unperturbed operator.
    #[arg(long, default_value_t = 5)]
    nmeas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_dofs: usize,
    #[arg(long)]
    out: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(gnwood::Error),
}

impl From<gnwood::Error> for CliError {
    fn from(e: gnwood::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot set up {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Mesh(a) => commands::mesh(a),
        Command::Survey(a) => commands::survey(a),
        Command::Model(a) => commands::model(a),
        Command::Forward(a) => commands::forward(a),
        Command::Invert(a) => commands::invert(a),
        Command::Bench(a) => commands::bench(a),
        Command::Spectrum(a) => commands::spectrum(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
