//! `blochsl`: dataset generation, training, evaluation, sweeps and timing.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bloch_sl::{BangControl, DatasetId, Preset};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blochsl",
    version,
    about = "Bang-bang qubit control datasets and MLP surrogates",
    args_override_self = true,
    after_help = "Every subcommand also accepts --config <FILE>: a `key = value` file using the long flag names. \
                  Flags on the command line override the file.\n\
                  Exit codes: 0 ok, 2 usage, 3 I/O, 4 numerical failure."
)]
pub struct Cli {
    /// Worker threads for parallel loops (default: all cores).
    #[arg(long, global = true, env = "BLOCHSL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset file, or role-exchange an existing one.
    Generate(GenerateArgs),
    /// Train a network on a dataset and write report, history and checkpoint.
    Train(TrainArgs),
    /// Test-split MAE of a saved checkpoint.
    Evaluate(EvaluateArgs),
    /// Exact (and optionally predicted) mapping for one control.
    Sweep(SweepArgs),
    /// Test MAE as a function of the training-set fraction.
    Fractions(FractionsArgs),
    /// Per-sample simulation versus inference time.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Dataset to generate (ds1..ds4); with --from, the expected output id.
    #[arg(long, value_parser = parse_id)]
    pub id: Option<DatasetId>,
    /// Records per offset.
    #[arg(long, default_value_t = 10_000)]
    pub per_offset: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
    /// Build the partner dataset by exchanging Δ and d in this file.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Also export the records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Generate without the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args, Clone)]
pub struct TrainingFlags {
    #[arg(long, default_value = "desk", value_parser = parse_preset)]
    pub preset: Preset,
    /// Seed for the split, initialisation and batch order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Keep the last epoch's weights instead of the best.
    #[arg(long)]
    pub no_restore_best: bool,
    /// Train without the thread pool (results are identical).
    #[arg(long)]
    pub sequential: bool,
    /// Leave wall-clock time out of reports.
    #[arg(long)]
    pub canonical: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Results root; files go to <out-dir>/<dataset>/<preset>/<seed>/.
    #[arg(long, default_value = "reports")]
    pub out_dir: PathBuf,
    /// Fraction of the training split to use.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Seed of the train/test split used during training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for evaluation.txt (default: the model's directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKindArg {
    Direct,
    Inverse,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Control as "<sign>:<s1>,...,<s5>", e.g. "+1:10,20,30,40,50".
    #[arg(long, value_parser = parse_control, conflicts_with = "index")]
    pub control: Option<BangControl>,
    /// Dataset whose test split supplies the control (with --index).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Position in the test split of --data.
    #[arg(long, requires = "data")]
    pub index: Option<usize>,
    /// Split seed used with --index.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint whose predictions are added to the curve.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SweepKindArg::Direct)]
    pub kind: SweepKindArg,
    /// Grid points on [0, 1].
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    #[arg(long, default_value = "sweep")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FractionsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value = "reports")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Samples simulated and inferred.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value = "desk", value_parser = parse_preset)]
    pub preset: Preset,
    /// Use this checkpoint instead of a freshly initialised network.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_id(s: &str) -> Result<DatasetId, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_control(s: &str) -> Result<BangControl, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        bloch_sl::par::set_thread_count(n);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
