//! `countsketch`: runs the sketch error experiments and the concentration
//! checks, writing CSV or JSON tables ready for plotting.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters; exit code 1.
    Usage(String),
    /// The experiment ran but its outcome is a failure; exit code 2.
    Experiment(String),
    /// Anything else; exit code 3.
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Experiment(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Experiment(m) => write!(f, "experiment failed: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<countsketch::Error> for CliError {
    fn from(e: countsketch::Error) -> Self {
        use countsketch::Error as E;
        match e {
            E::InvalidConfig(_) | E::Input(_) | E::Unsupported(_) | E::InvalidPartition(_) => {
                CliError::Usage(e.to_string())
            }
            E::Degenerate(_) => CliError::Experiment(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "countsketch", version, about = "Count-Sketch error experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    Pareto,
    PowerLaw,
    Lognormal,
    File,
}

impl std::fmt::Display for SignalArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

impl std::str::FromStr for SignalArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the subcommand's defaults.
#[derive(Args, Debug, Default)]
pub struct Common {
    /// Signal length.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of heavy hitters.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Sketch rows R.
    #[arg(long, global = true)]
    pub rows: Option<u32>,
    /// Sketch columns C.
    #[arg(long, global = true)]
    pub cols: Option<u32>,
    /// Pareto or power-law exponent.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Independent trials (fresh signal and hash functions each).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub signal: Option<SignalArg>,
    /// Vector to sketch, one value per line (with `--signal file`).
    #[arg(long, global = true)]
    pub signal_file: Option<PathBuf>,
    /// Log-scale spread for the lognormal signal.
    #[arg(long, global = true)]
    pub sigma_log: Option<f64>,
    /// Coordinates measured per trial; 0 measures all of them.
    #[arg(long, global = true)]
    pub per_trial: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Histograms of the point error E_p / m_{R,C}, one file per (R,C).
    PointError {
        /// Sketch shapes, e.g. `13x100,26x100,26x200`.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Top-k error distribution plus sweeps over R, C and k.
    Topk {
        #[arg(long)]
        rows_sweep: Option<String>,
        #[arg(long)]
        cols_sweep: Option<String>,
        #[arg(long)]
        k_sweep: Option<String>,
        /// Columns used for the k sweep.
        #[arg(long)]
        variance_cols: Option<u32>,
    },
    /// Tail probability of the squared point error on a grid of t.
    Tailcurve {
        /// Comma list or inclusive integer range such as `1..12`.
        #[arg(long)]
        t_grid: Option<String>,
    },
    /// Small-ball, median-tail, vector-median and partition-median checks.
    Concentration {
        /// Random ensembles for the vector-median check.
        #[arg(long)]
        ensembles: Option<usize>,
        /// Random lists per partition shape.
        #[arg(long)]
        lists: Option<usize>,
        /// Monte-Carlo trials for the sampled checks.
        #[arg(long)]
        mc_trials: Option<usize>,
        #[arg(long, hide = true)]
        force_fail: bool,
    },
    /// Count-Min against Count-Sketch at the same shape.
    CompareCm,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("countsketch: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
