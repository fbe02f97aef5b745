//! The `signlab` command line: argument grammar, subcommand wiring and exit codes.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid input,
//! 3 a configured size cap was exceeded, 4 a numerical cross-check failed.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use signlab_core::concentration::Method;
use signlab_core::smoothing::LazyDistribution;
use signlab_core::{Error, NormalVector};

use output::{Format, RunInfo};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_CROSS_CHECK: i32 = 4;

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Parser)]
#[command(name = "signlab", version, about = "Singularity probability of random ±1 matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; sidecars and the manifest are written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fill the `seconds` columns (they are left empty so reruns compare byte for byte).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive census of all n×n sign matrices.
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "symmetric")]
        plain: bool,
        /// Enumerate matrices with first row and column +1 and scale by the orbit size.
        #[arg(long)]
        symmetric: bool,
        /// Permit the n = 7 symmetric census (hours).
        #[arg(long)]
        allow_n7: bool,
        /// Resumable checkpoint file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// P(H) = Pr[a·x = 0] for uniform sign vectors x.
    Conc {
        /// Comma-separated normal; repeat the flag for several rows.
        #[arg(long = "a", required = true, allow_hyphen_values = true, value_parser = parse_normal)]
        a: Vec<NormalVector>,
        #[arg(long, default_value = "auto", value_parser = parse_method)]
        method: Method,
        /// Modulus for the Fourier method (default Σ|a|+1).
        #[arg(long)]
        q: Option<u64>,
    },
    /// Lazy-walk smoothing T(H), the f(i) profile and the sandwich constants.
    Smooth {
        #[arg(long = "a", required = true, allow_hyphen_values = true, value_parser = parse_normal)]
        a: Vec<NormalVector>,
        /// Λ threshold (default 2^(-n/4)).
        #[arg(long)]
        eps: Option<f64>,
        /// Step probabilities p0,p1,...; p_k is the mass at each of ±k.
        #[arg(long, value_parser = parse_dist)]
        dist: Option<LazyDistribution>,
    },
    /// Sample hyperplanes spanned by sign vectors and classify them by P(H).
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: u64,
        /// Small-class exponent: P(H) ≤ 2^{-(1-δ)n} is G1.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Large-class factor: P(H) ≥ factor/√n is G3.
        #[arg(long, default_value_t = 0.5)]
        theta_factor: f64,
    },
    /// Monte Carlo estimate of P_n.
    Mc {
        #[arg(long)]
        n: usize,
        /// Trial count; accepts integers and forms like 2e6.
        #[arg(long, value_parser = parse_count)]
        trials: u64,
    },
    /// Monte Carlo estimates for several n with the exponent trend.
    Series {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_parser = parse_count)]
        trials: u64,
    },
    /// Σ_H P(H) over all hyperplanes spanned by sign vectors, against P_n.
    Sumh {
        #[arg(long)]
        n: usize,
    },
}

fn parse_normal(s: &str) -> Result<NormalVector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dist(s: &str) -> Result<LazyDistribution, String> {
    LazyDistribution::parse(s).map_err(|e| e.to_string())
}

/// Parses "2000000" or "2e6"; the value must be a positive integer.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= (1u64 << 53) as f64 {
        Ok(x as u64)
    } else {
        Err(format!("not an exact non-negative integer: {s:?}"))
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                Error::LimitExceeded { .. } => EXIT_LIMIT,
                Error::CrossCheck(_) => EXIT_CROSS_CHECK,
                Error::Checkpoint(_) => EXIT_IO,
                _ => EXIT_USAGE,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

/// Runs with process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_io(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Tables go to `--out` when given, otherwise to `stdout`; the
/// one-line summary goes to `stdout` after a file write and to `stderr` otherwise.
pub fn run_with_io<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "signlab: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let started = output::unix_now();
    let plan = commands::plan(cli)?;
    let hash = output::manifest_hash(plan.subcommand, &plan.params, cli.global.seed);
    let outcome = commands::execute(cli, &plan, &hash)?;
    let g = &cli.global;
    match &g.out {
        Some(path) => {
            let info = RunInfo {
                subcommand: plan.subcommand,
                params: &plan.params,
                seed: g.seed,
                threads: g.threads,
                format: g.format,
                hash: &hash,
                started,
            };
            let files = output::output_files(path, &outcome, &info);
            output::write_all_atomic(&files).map_err(CliError::Io)?;
            writeln!(stdout, "{} -> {}", outcome.summary, path.display()).map_err(CliError::Io)?;
        }
        None => {
            stdout.write_all(&outcome.primary.render(g.format)).map_err(CliError::Io)?;
            writeln!(stderr, "{}", outcome.summary).map_err(CliError::Io)?;
        }
    }
    Ok(())
}
