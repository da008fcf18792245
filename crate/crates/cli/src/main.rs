//! Command-line driver: sweeps the library's postselected and averaged
//! phases, samples trajectory ensembles, scans the topological transition,
//! and traces interferometer ports, writing CSV or JSON artifacts.

mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

const AFTER_HELP: &str = "\
Angles accept decimal radians or fractions of pi: pi/4, 3pi/4, 0.5pi.
Ranges are inclusive, written start:stop:count.

Environment:
  GEOMPHASE_OUTPUT_DIR  directory prepended to relative --output paths
  GEOMPHASE_THREADS     worker-thread count used when --threads is absent

Exit codes: 0 ok; 2 run finished with flagged points; 3 topology failure;
4 search found nothing.";

#[derive(Parser)]
#[command(
    name = "geomphase",
    version,
    about = "Geometric phases of a qubit under rings of variable-strength measurements",
    after_help = AFTER_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form postselected phase over a (c, theta) sweep
    Postselected(CommonArgs),
    /// Sampled phase histogram with readout-averaged summary readings
    Distribution(CommonArgs),
    /// Chern numbers by the endpoint and plaquette methods
    Chern(CommonArgs),
    /// Critical strengths: postselected root and averaged visibility zero
    Critical(CommonArgs),
    /// Interferometer port intensities over a gamma sweep
    Interferometer(InterferometerArgs),
}

#[derive(Args)]
struct InterferometerArgs {
    /// Read-out realized at the ports
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    #[command(flatten)]
    common: CommonArgs,
}

/// The flag surface shared by every command; fields a command does not
/// consume are simply ignored by it.
#[derive(Args)]
struct CommonArgs {
    /// Measurement strength
    #[arg(long, value_name = "C", conflicts_with = "c_range")]
    c: Option<String>,
    /// Strength sweep start:stop:count
    #[arg(long, value_name = "RANGE")]
    c_range: Option<String>,
    /// Polar angle of the measurement cone
    #[arg(long, value_name = "ANGLE", conflicts_with = "theta_range", allow_hyphen_values = true)]
    theta: Option<String>,
    /// Polar-angle sweep start:stop:count
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    theta_range: Option<String>,
    /// Interferometer phase offset
    #[arg(long, value_name = "ANGLE", conflicts_with = "gamma_range", allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Offset sweep start:stop:count [default: 0:2pi:65]
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    gamma_range: Option<String>,
    /// Measurements per ring [default: 500]
    #[arg(long, alias = "n", value_name = "N")]
    steps: Option<usize>,
    /// Sampled realizations [default: 4000]
    #[arg(long, value_name = "COUNT")]
    realizations: Option<u64>,
    /// Master seed of the counter-based sampler [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Histogram bins over [-pi, pi) [default: 64]
    #[arg(long, value_name = "BINS")]
    bins: Option<usize>,
    /// Input beam intensity [default: 1]
    #[arg(long, value_name = "I0")]
    i0: Option<f64>,
    /// Output file (stdout when absent)
    #[arg(long, short = 'o', value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads, 0 = all cores [default: 0]
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// key=value defaults file; flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn from_config(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format '{other}' (csv or json)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    /// Keep only all-`+` records of the measured arm
    Postselected,
    /// Filter the reference arm by the measured arm's final state
    Polarizer,
    /// Keep every record
    Averaged,
}

impl Scheme {
    fn from_config(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "postselected" => Ok(Scheme::Postselected),
            "polarizer" => Ok(Scheme::Polarizer),
            "averaged" => Ok(Scheme::Averaged),
            other => bail!("unknown scheme '{other}' (postselected, polarizer, or averaged)"),
        }
    }
}

fn run() -> Result<u8> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let _ = e.print();
            return Ok(1);
        }
    };
    let (name, common, scheme) = match &cli.command {
        Command::Postselected(a) => ("postselected", a, None),
        Command::Distribution(a) => ("distribution", a, None),
        Command::Chern(a) => ("chern", a, None),
        Command::Critical(a) => ("critical", a, None),
        Command::Interferometer(a) => ("interferometer", &a.common, a.scheme),
    };
    let cfg = config::resolve(name, common, scheme)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match name {
        "postselected" => commands::postselected(&cfg),
        "distribution" => commands::distribution(&cfg),
        "chern" => commands::chern(&cfg),
        "critical" => commands::critical(&cfg),
        "interferometer" => commands::interferometer(&cfg),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
