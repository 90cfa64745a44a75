//! The `gasket` command line.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasket_core::measure::DEFAULT_REFINEMENT_DEPTH;
use gasket_core::Error;

pub use output::Format;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Highest level accepted on the command line.
pub const MAX_LEVEL: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "gasket",
    version,
    about = "Dirichlet and Schrödinger problems on p.c.f. self-similar fractals, with randomized checks of maximum principles and Harnack estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve Δu − uν = σ with Dirichlet data on V_0.
    Solve(SolveArgs),
    /// Run a randomized verification suite.
    Verify(VerifyArgs),
    /// Print vertex, cell and edge counts per level.
    Info(InfoArgs),
    /// Effective resistance between vertices.
    Resistance(ResistanceArgs),
    /// A slice g(x, ·) of the Green kernel with boundary V_0.
    Green(GreenArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the artifact to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Artifact format; inferred from the `--out` extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized commands; always recorded in the artifact.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    Picard,
    Both,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Preset name (`sg3`) or fractal JSON file.
    fractal: String,
    #[arg(short = 'n', long = "level", default_value_t = 4)]
    level: usize,
    /// Boundary values on V_0, comma separated; zero when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "CSV")]
    boundary: Vec<f64>,
    /// Source measure σ (JSON).
    #[arg(long, value_name = "FILE")]
    sigma: Option<PathBuf>,
    /// Potential measure ν ≥ 0 (JSON).
    #[arg(long, value_name = "FILE")]
    nu: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
    method: MethodArg,
    /// Extra refinement levels for the potential's mass matrix.
    #[arg(long, default_value_t = DEFAULT_REFINEMENT_DEPTH)]
    quadrature_depth: usize,
    /// Solve on K_m for the blowup prefix α_1..α_m.
    #[arg(long, value_name = "DIGITS")]
    blowup: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Weak maximum principle.
    Mp,
    /// Strong maximum principle.
    StrongMp,
    /// Positive outward normal derivative at a boundary maximum.
    Hopf,
    /// Level stability of empirical Harnack constants.
    Harnack,
    /// Resistance bound on normalized solutions.
    Equicontinuity,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Mp => "mp",
            Suite::StrongMp => "strong-mp",
            Suite::Hopf => "hopf",
            Suite::Harnack => "harnack",
            Suite::Equicontinuity => "equicontinuity",
        }
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Preset name (`sg3`) or fractal JSON file.
    fractal: String,
    #[arg(value_enum)]
    suite: Suite,
    /// Level, or comma separated levels for `harnack` (default 4,5,6).
    #[arg(short = 'n', long = "level", value_delimiter = ',')]
    levels: Vec<usize>,
    /// Instances, or boundary samples per level for `harnack`.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Vertex pairs per instance for `equicontinuity`.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    /// Cell level of the Harnack region (all cells avoiding V_0).
    #[arg(long, default_value_t = 2)]
    region_level: usize,
    /// Single potential for `harnack` instead of 0, μ and 5μ.
    #[arg(long, value_name = "FILE")]
    nu: Option<PathBuf>,
    /// Run every instance on K_m for the blowup prefix α_1..α_m.
    #[arg(long, value_name = "DIGITS")]
    blowup: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct InfoArgs {
    /// Preset name (`sg3`) or fractal JSON file.
    fractal: String,
    #[arg(short = 'n', long = "level", default_value_t = 4)]
    level: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ResistanceArgs {
    /// Preset name (`sg3`) or fractal JSON file.
    fractal: String,
    /// Two or more vertices, `q<k>` or `w<word>:<label>`.
    #[arg(num_args = 2.., required = true)]
    points: Vec<String>,
    #[arg(short = 'n', long = "level", default_value_t = 4)]
    level: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GreenArgs {
    /// Preset name (`sg3`) or fractal JSON file.
    fractal: String,
    /// Vertex x of the slice.
    #[arg(long, value_name = "ADDRESS")]
    at: String,
    #[arg(short = 'n', long = "level", default_value_t = 4)]
    level: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    CheckFailed(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::CheckFailed(_) => EXIT_CHECK_FAILED,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::CheckFailed(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Singular(_)
            | Error::NotContractive { .. }
            | Error::CertificationFailed { .. }
            | Error::Numerical(_) => Failure::Numerical(message),
            _ => Failure::Usage(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type Outcome = std::result::Result<(), Failure>;

pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Info(a) => commands::info(a),
        Command::Resistance(a) => commands::resistance(a),
        Command::Green(a) => commands::green(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}
