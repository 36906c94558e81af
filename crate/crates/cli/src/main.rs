//! `qoc`: Quality-of-Coverage profiles, region aggregation, synthetic
//! scenarios and sparsity-sensitivity studies from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qoc_core::duration::parse_duration_ms;
use qoc_core::{Kpi, LayoutMode, MetricKind, ScenarioKind};

mod commands;
mod files;
mod input;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<qoc_core::Error> for CliError {
    fn from(err: qoc_core::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qoc", version, about = "Quality-of-Coverage KPI toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic scenario series: one CSV per (cell, run) plus a
    /// parameter sidecar.
    Simulate(SimulateArgs),
    /// Compute per-window QoC profiles of a measurement CSV.
    Kpi(KpiArgs),
    /// Write a synthetic region layout (which series fills which region slot).
    Layout(LayoutArgs),
    /// Merge profile files into per-region profiles with KPI sketches.
    Aggregate(AggregateArgs),
    /// Print a KPI quantile from a region file.
    Query(QueryArgs),
    /// Measure KPI error under temporal or spatial down-sampling.
    #[command(subcommand)]
    Sensitivity(SensitivityCommand),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 30)]
    days: u64,
    /// Sampling interval in minutes.
    #[arg(long, default_value_t = 1)]
    dt: u64,
    #[arg(long, default_value_t = 7)]
    cells: u32,
    #[arg(long, default_value_t = 50)]
    runs: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Window length: a duration such as `24h`, `1h`, `30m`, or `all` for one
/// window spanning the whole series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowArg {
    Fixed(u64),
    Whole,
}

fn parse_window(text: &str) -> Result<WindowArg, String> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(WindowArg::Whole);
    }
    match parse_duration_ms(text) {
        Ok(0) => Err("window must be positive".into()),
        Ok(ms) => Ok(WindowArg::Fixed(ms)),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_duration_arg(text: &str) -> Result<u64, String> {
    parse_duration_ms(text).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Align {
    /// Windows start at the first sample.
    Start,
    /// Windows start at multiples of the window length since the Unix epoch.
    Calendar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Options shared by everything that classifies series.
#[derive(Debug, Clone, Args)]
pub struct ProfileOptions {
    #[arg(long, default_value = "downlink")]
    pub metric: MetricKind,
    /// Usability threshold τ in metric units (Mbps, ms or loss fraction).
    #[arg(long)]
    pub tau: f64,
    /// Fractional hysteresis band b in [0, 0.5).
    #[arg(long, default_value_t = 0.0)]
    pub hysteresis: f64,
    #[arg(long, default_value = "24h", value_parser = parse_window)]
    pub window: WindowArg,
    #[arg(long, value_enum, default_value_t = Align::Start)]
    pub align: Align,
    /// Split runs at gaps longer than this multiple of the sampling interval.
    #[arg(long)]
    pub gap_split: Option<f64>,
    /// Sampling interval Δ; defaults to the median gap between samples.
    #[arg(long, value_parser = parse_duration_arg)]
    pub interval: Option<u64>,
}

#[derive(Debug, Args)]
struct KpiArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    profile: ProfileOptions,
    /// Also report whether ≥ 95% of latency samples are ≤ 100 ms.
    #[arg(long)]
    fcc_check: bool,
    /// Series name when the CSV has no cell_id column (default: file stem).
    #[arg(long)]
    cell_id: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    #[arg(long)]
    mode: LayoutMode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte-Carlo run whose series fill the slots.
    #[arg(long, default_value_t = 0)]
    run: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Profile files written by `kpi --format json`.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Layout file; without it all series form the single region `all`.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long, default_value_t = qoc_core::sketch::DEFAULT_ALPHA)]
    alpha: f64,
    /// Directory receiving one `<region>.json` per region.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long)]
    kpi: Kpi,
    #[arg(long)]
    q: f64,
}

#[derive(Debug, Subcommand)]
enum SensitivityCommand {
    /// Down-sample every input series in time.
    Temporal(TemporalArgs),
    /// Keep k random cells of every region.
    Spatial(SpatialArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TemporalMode {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiArg {
    Normal,
    Bootstrap,
}

#[derive(Debug, Clone, Args)]
pub struct StudyOptions {
    #[arg(long, default_value_t = qoc_core::sensitivity::DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CiArg::Normal)]
    pub ci: CiArg,
    /// Report CSV; a `.meta.json` sidecar records the seed and plans.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
struct TemporalArgs {
    /// Measurement CSVs; every series is one unit of the study.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    profile: ProfileOptions,
    #[arg(long, value_enum)]
    mode: TemporalMode,
    /// Fixed-mode bin widths, e.g. `5m,1h,6h,12h,24h,5d`.
    #[arg(long, value_delimiter = ',', value_parser = parse_duration_arg)]
    intervals: Vec<u64>,
    /// Random-mode retention fractions, e.g. `0.5,0.25,0.1`.
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    #[command(flatten)]
    study: StudyOptions,
}

#[derive(Debug, Args)]
struct SpatialArgs {
    /// Profile files written by `kpi --format json`.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    layout: PathBuf,
    /// Cells kept per region, e.g. `6,5,4,3,2,1`.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[command(flatten)]
    study: StudyOptions,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => {
            commands::simulate(a.scenario, a.days, a.dt, a.cells, a.runs, a.seed, &a.out)
        }
        Command::Kpi(a) => commands::kpi(
            &a.input,
            &a.profile,
            a.fcc_check,
            a.cell_id.as_deref(),
            a.format,
            a.out.as_deref(),
        ),
        Command::Layout(a) => commands::layout(a.mode, a.seed, a.run, &a.out),
        Command::Aggregate(a) => {
            commands::aggregate(&a.inputs, a.layout.as_deref(), a.alpha, &a.out)
        }
        Command::Query(a) => commands::query(&a.region, a.kpi, a.q),
        Command::Sensitivity(SensitivityCommand::Temporal(a)) => commands::temporal(
            &a.inputs,
            &a.profile,
            a.mode,
            &a.intervals,
            &a.fractions,
            &a.study,
        ),
        Command::Sensitivity(SensitivityCommand::Spatial(a)) => {
            commands::spatial(&a.inputs, &a.layout, &a.k, &a.study)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
