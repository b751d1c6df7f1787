//! Command-line front end: parameter sweeps, security bounds, honest Monte
//! Carlo campaigns and attacks, emitted as CSV or key-value reports.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use output::{Format, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] qds_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_SECURITY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qds", version, about = "Quantum digital signature simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML experiment configuration, layered over the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base parameter set: lab-2014 or ideal.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Overrides `run.seed`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `run.trials`
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic and sampled elimination rates over a grid of intensities.
    Sweep(SweepArgs),
    /// Security analysis of a cost matrix.
    Bounds(BoundsArgs),
    /// Seeded honest protocol runs.
    Simulate(SimulateArgs),
    /// Attack simulations next to their analytic bounds.
    Attack(AttackArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated alpha_sq values, replacing `run.sweep`.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Cost matrix file. Defaults to the built-in 2014 reference matrix.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Overrides `protocol.security_level`.
    #[arg(long)]
    pub security_level: Option<f64>,
    /// Transmittance the matrix was measured at; requires --rescale-to.
    #[arg(long, requires = "rescale_to")]
    pub rescale_from: Option<f64>,
    /// Transmittance to extrapolate the matrix to.
    #[arg(long, requires = "rescale_from")]
    pub rescale_to: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory for per-trial record files.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    #[value(name = "repudiate")]
    Repudiate,
    #[value(name = "forge_passive")]
    ForgePassive,
    #[value(name = "forge_active_bound")]
    ForgeActiveBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ForgerKind {
    Srm,
    Uniform,
    Omniscient,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum)]
    pub kind: AttackKind,
    /// Mismatch probability a repudiating sender aims for. Defaults to the
    /// midpoint of the thresholds.
    #[arg(long)]
    pub target: Option<f64>,
    /// Forger's guessing measurement.
    #[arg(long, value_enum, default_value = "srm")]
    pub strategy: ForgerKind,
    /// Forger's copy amplitude relative to an honest copy. Defaults to 1 for
    /// passive forging and sqrt(3/2) for the active bound.
    #[arg(long)]
    pub amplitude_scale: Option<f64>,
    /// Use this cost matrix as the recipients' click statistics.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

/// Parses `args`, runs the command and writes the report. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_ERROR
                }
            };
        }
    };
    match commands::execute(&cli) {
        Ok(outcome) => {
            let format = cli.common.format.unwrap_or(outcome.default_format);
            let written = match &cli.common.out {
                Some(path) => std::fs::File::create(path)
                    .map_err(CliError::from)
                    .and_then(|f| outcome.report.write(format, std::io::BufWriter::new(f))),
                None => outcome.report.write(format, &mut *stdout),
            };
            match written {
                // The reader went away (e.g. piped into `head`); nothing left to report.
                Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_ERROR;
                }
                Ok(()) => {}
            }
            if outcome.provable {
                EXIT_OK
            } else {
                let _ = writeln!(
                    stderr,
                    "no provable security: the guaranteed advantage is not positive"
                );
                EXIT_NO_SECURITY
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
