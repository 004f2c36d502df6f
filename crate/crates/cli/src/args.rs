//! Command-line surface. The parsed subcommand doubles as the record of
//! effective flag values stored in each run manifest.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "chartpulse",
    version,
    about = "Stream-count modeling for daily music charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Validate a chart CSV, print a summary and write a binary cache.
    Ingest(IngestArgs),
    /// Descriptive analyses of a chart as plot-ready CSV (and SVG).
    Analyze(AnalyzeArgs),
    /// Fit one song's daily streams by maximum likelihood or log-linear regression.
    Fit(FitArgs),
    /// Simulate daily counts or event times from a parameter file.
    Simulate(SimulateArgs),
    /// Cluster songs on (decay rate, R²) features with k-means.
    Cluster(ClusterArgs),
    /// Re-run a command from its manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DatasetArgs {
    /// Chart CSV or a cache written by `ingest`.
    #[arg(long)]
    pub input: PathBuf,
    /// Rows expected on every chart day.
    #[arg(long, default_value_t = 200)]
    pub chart_size: u32,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    RankStats,
    PowerLaw,
    UniqueSongs,
    Durations,
    DurationByPeak,
    NumberOnes,
    Weekday,
    DecayByPeak,
    All,
}

impl Analysis {
    pub const EACH: [Analysis; 8] = [
        Analysis::RankStats,
        Analysis::PowerLaw,
        Analysis::UniqueSongs,
        Analysis::Durations,
        Analysis::DurationByPeak,
        Analysis::NumberOnes,
        Analysis::Weekday,
        Analysis::DecayByPeak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::RankStats => "rank-stats",
            Analysis::PowerLaw => "power-law",
            Analysis::UniqueSongs => "unique-songs",
            Analysis::Durations => "durations",
            Analysis::DurationByPeak => "duration-by-peak",
            Analysis::NumberOnes => "number-ones",
            Analysis::Weekday => "weekday",
            Analysis::DecayByPeak => "decay-by-peak",
            Analysis::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Analyses to run.
    #[arg(required = true, value_enum)]
    pub analyses: Vec<Analysis>,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write an SVG rendering of each analysis.
    #[arg(long)]
    pub svg: bool,
    /// Rank for the weekday profile (defaults to the last rank).
    #[arg(long)]
    pub rank: Option<u32>,
    /// Fit the power law by nonlinear least squares instead of log-log OLS.
    #[arg(long)]
    pub nls: bool,
    /// Minimum observed days for a song to enter decay-by-peak.
    #[arg(long, default_value_t = 14)]
    pub min_days: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mle,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Song as "title::artist"; optional when the input holds one song.
    #[arg(long)]
    pub song: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Mle)]
    pub method: Method,
    /// Day (1-based, counted from the song's first chart day) of an extra
    /// jump event. Repeatable.
    #[arg(long = "jump-day", conflicts_with = "auto_jump")]
    pub jump_days: Vec<usize>,
    /// Place one extra jump event at the largest relative day-over-day rise.
    #[arg(long)]
    pub auto_jump: bool,
    /// Days after the first chart day before `--auto-jump` looks for a rise.
    #[arg(long, default_value_t = 7)]
    pub min_gap: usize,
    /// Regression over the days from the series' final peak onwards.
    #[arg(long)]
    pub from_final_peak: bool,
    /// Length of one day in model time units.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 8)]
    pub multistart: usize,
    #[arg(long, env = "CHARTPULSE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimOutput {
    Counts,
    Events,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Parameter JSON: {"lambda": .., "events": [{"a": .., "theta": .., "beta": ..}]}.
    #[arg(long)]
    pub params: PathBuf,
    /// Number of days to simulate.
    #[arg(long)]
    pub days: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = SimOutput::Counts)]
    pub mode: SimOutput,
    #[arg(long, env = "CHARTPULSE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Chart date of the first simulated day.
    #[arg(long, default_value = "2017-01-01")]
    pub start_date: NaiveDate,
    /// Title used for the simulated song (defaults to the parameter file name).
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value = "simulated")]
    pub artist: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, env = "CHARTPULSE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Minimum observed days for a song to be clustered.
    #[arg(long, default_value_t = 14)]
    pub min_days: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    /// Cluster raw (decay rate, R²) instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,
    /// Largest k in the elbow report (which starts at 2).
    #[arg(long, default_value_t = 12)]
    pub elbow_max: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Analyze(_) => "analyze",
            Command::Fit(_) => "fit",
            Command::Simulate(_) => "simulate",
            Command::Cluster(_) => "cluster",
            Command::Replay(_) => "replay",
        }
    }

    pub fn out_dir_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Ingest(a) => Some(&mut a.out_dir),
            Command::Analyze(a) => Some(&mut a.out_dir),
            Command::Fit(a) => Some(&mut a.out_dir),
            Command::Simulate(a) => Some(&mut a.out_dir),
            Command::Cluster(a) => Some(&mut a.out_dir),
            Command::Replay(_) => None,
        }
    }

    pub fn inputs_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            Command::Ingest(a) => vec![&mut a.dataset.input],
            Command::Analyze(a) => vec![&mut a.dataset.input],
            Command::Fit(a) => vec![&mut a.dataset.input],
            Command::Simulate(a) => vec![&mut a.params],
            Command::Cluster(a) => vec![&mut a.dataset.input],
            Command::Replay(_) => vec![],
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Fit(a) => Some(a.seed),
            Command::Simulate(a) => Some(a.seed),
            Command::Cluster(a) => Some(a.seed),
            _ => None,
        }
    }
}
