mod commands;
mod grid;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spheig::{Branch, Error};

#[derive(Parser, Debug)]
#[command(name = "spheig", version, about = "Exponents of separable p-harmonic functions in cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exponent, eigenfunction and inner/outer bracket of one domain.
    Exponent(ExponentArgs),
    /// Exponents over a grid of p and opening values.
    Sweep(SweepArgs),
    /// Truncated-cone solves and the diagnostics of the deformation family.
    Cone(ConeArgs),
    /// Randomized property suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainKind {
    Arc,
    Cap,
    Polygon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct DomainArgs {
    /// Domain kind; polygons need --vertices-file.
    #[arg(long, value_enum, default_value = "arc")]
    pub domain: DomainKind,
    /// Ambient dimension N (default 2 for arcs, 3 otherwise).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Polygon vertices: a domain spec file or one `x y z` triple per line.
    #[arg(long)]
    pub vertices_file: Option<PathBuf>,
    #[arg(long, default_value = "singular")]
    pub branch: Branch,
    /// Absolute tolerance on exponents.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct ExponentArgs {
    #[arg(long)]
    pub p: f64,
    /// Arc length or cap opening in radians; accepts multiples of pi.
    #[arg(long, value_parser = grid::parse_scalar)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Dyadic margins 0.2·2^-k, k < steps, of the inner/outer bracket; 0 skips it.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Grid of p values: `v1,v2` or `start:step:end`.
    #[arg(long)]
    pub p: String,
    /// Grid of openings (ignored for polygons).
    #[arg(long, default_value = "pi/2")]
    pub alpha: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Write β against p, one line per opening.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Report zero wall times, for byte-identical output.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ConeArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_parser = grid::parse_scalar)]
    pub alpha: f64,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Inner radius.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Outer radius.
    #[arg(long, default_value_t = 256.0)]
    pub b: f64,
    /// Deformation parameters, containing 0 and 1.
    #[arg(long, default_value = "0:0.125:1")]
    pub tau_grid: String,
    /// The approximating pair uses the margin 0.2·2^-steps.
    #[arg(long, default_value_t = 6)]
    pub steps: u32,
    /// Angular intervals of the grid.
    #[arg(long, default_value_t = 32)]
    pub n_theta: usize,
    /// Width of the boundary band, as a bound on sin of the angular distance.
    #[arg(long, default_value_t = 0.2)]
    pub kappa: f64,
    /// Plot of the oscillation against the shell radius.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Vector inequality trials per (p, N).
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Run a single named check.
    #[arg(long)]
    pub only: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Caps the global pool at `SPHEIG_THREADS` workers when set.
fn configure_pool() -> Result<(), Error> {
    let Ok(text) = std::env::var("SPHEIG_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::ConfigError(format!("SPHEIG_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::ConfigError(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_pool().and_then(|()| match &cli.command {
        Command::Exponent(a) => commands::exponent(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Cone(a) => commands::cone(a),
        Command::Verify(a) => commands::verify(a),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{record}");
            ExitCode::from(2)
        }
    }
}
