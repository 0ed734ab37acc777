use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncamon::{DimSpec, FitSettings, Method};

#[derive(Debug, Parser)]
#[command(name = "ncamon", version, about = "Process monitoring with neural component analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a monitor on normal operating data and save it as JSON.
    Train(TrainArgs),
    /// Score samples against a saved monitor and write alarm records.
    Monitor(MonitorArgs),
    /// Fit several methods once and report MDR/FAR on labelled fault runs.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic training set and a faulty test run.
    Synth(SynthArgs),
    /// Export feature scatters, decoder frames and loss traces as CSV.
    Inspect(InspectArgs),
}

/// Optimizer and limit settings shared by every fitting command.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Number of retained features: an integer or `cpv:<fraction>`.
    #[arg(long, default_value = "cpv:0.85", value_parser = parse_dim)]
    pub dim: DimSpec,

    /// Control-limit confidence level.
    #[arg(long, default_value_t = 0.99, value_parser = parse_confidence)]
    pub confidence: f64,

    /// NCA encoder epochs per outer iteration and total autoencoder epochs.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Gradient-descent learning rate.
    #[arg(long, value_parser = parse_positive)]
    pub lr: Option<f64>,

    /// Seed for network initialization.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl FitArgs {
    pub fn settings(&self) -> FitSettings {
        let mut s = FitSettings::default();
        s.train.seed = self.seed;
        if let Some(lr) = self.lr {
            s.train.learning_rate = lr;
        }
        if let Some(e) = self.epochs {
            s.train.epochs_per_outer = e;
            s.autoencoder_epochs = e;
        }
        s
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, alias = "methods", value_parser = parse_method)]
    pub method: Method,

    /// Training CSV (normal operation only).
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub fit: FitArgs,

    /// Model JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,

    /// Samples to score, same columns as the training data.
    #[arg(long)]
    pub data: PathBuf,

    /// Records CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated methods, or `all`.
    #[arg(long, alias = "method", default_value = "all", value_parser = parse_methods)]
    pub methods: MethodList,

    #[arg(long)]
    pub train: PathBuf,

    /// Fault runs; repeat the flag or separate paths with commas.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    pub tests: Vec<PathBuf>,

    /// Index of the first faulty sample in every test run.
    #[arg(long, default_value_t = 160)]
    pub onset: usize,

    #[command(flatten)]
    pub fit: FitArgs,

    /// CSV table to write; the aligned table always goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    None,
    Step,
    Drift,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for `train.csv` and `test.csv`.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 8)]
    pub vars: usize,

    #[arg(long, default_value_t = 500)]
    pub train_rows: usize,

    #[arg(long, default_value_t = 960)]
    pub test_rows: usize,

    #[arg(long, default_value_t = 160)]
    pub onset: usize,

    #[arg(long, value_enum, default_value_t = FaultArg::Step)]
    pub fault: FaultArg,

    /// Fault size in standard deviations of the latent drive.
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub magnitude: f64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, alias = "method", default_value = "all", value_parser = parse_methods)]
    pub methods: MethodList,

    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,

    /// Optional runs to score; each yields a records CSV per method.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub tests: Vec<PathBuf>,

    /// Feature count for the refit; 2 gives plottable scatters.
    #[arg(long, default_value = "2", value_parser = parse_dim)]
    pub dim: DimSpec,

    #[arg(long, default_value_t = 0.99, value_parser = parse_confidence)]
    pub confidence: f64,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long, value_parser = parse_positive)]
    pub lr: Option<f64>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Directory for the emitted CSV files.
    #[arg(long)]
    pub out: PathBuf,
}

impl InspectArgs {
    pub fn fit_args(&self) -> FitArgs {
        FitArgs {
            dim: self.dim,
            confidence: self.confidence,
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
        }
    }
}

/// Newtype so clap treats the parsed list as one value.
#[derive(Debug, Clone)]
pub struct MethodList(pub Vec<Method>);

fn parse_dim(s: &str) -> Result<DimSpec, String> {
    s.parse().map_err(|e: ncamon::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: ncamon::Error| e.to_string())
}

fn parse_methods(s: &str) -> Result<MethodList, String> {
    Method::parse_list(s).map(MethodList).map_err(|e| e.to_string())
}

fn parse_confidence(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("confidence must be in (0, 1), got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}
