use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vmpc_core::ScenarioId;

#[derive(Debug, Parser)]
#[command(name = "vmpc", version, about = "Simulate, extract and analyse vehicular multipath components")]
pub struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise a recording and its ground truth.
    Simulate(SimulateArgs),
    /// Detect and track paths in a recording.
    Extract(ExtractArgs),
    /// Fit the path statistics of one or more track databases.
    Analyze(AnalyzeArgs),
    /// Simulate, extract and analyse seeded runs and compare with the model.
    Roundtrip(RoundtripArgs),
    /// Run a quick internal consistency check.
    SelfTest(SelfTestArgs),
}

fn parse_scenario(s: &str) -> Result<ScenarioId, String> {
    s.parse().map_err(|e: vmpc_core::Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be a positive number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Built-in scenario: H2I, HCT, HOT, RCT, ROT, TCT, UCT or UOT.
    #[arg(long, value_parser = parse_scenario, conflicts_with = "model")]
    pub scenario: Option<ScenarioId>,
    /// Scenario model as JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: u64,
    /// Run length, s.
    #[arg(long, value_parser = parse_positive)]
    pub duration: Option<f64>,
    /// Recording set period, s.
    #[arg(long, value_parser = parse_positive)]
    pub set_period: Option<f64>,
    /// Snapshots per recording set.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Transmitter speed, km/h.
    #[arg(long)]
    pub v_tx: Option<f64>,
    /// Receiver speed, km/h.
    #[arg(long)]
    pub v_rx: Option<f64>,
    /// Initial Tx-Rx distance, m.
    #[arg(long, value_parser = parse_positive)]
    pub d0: Option<f64>,
    /// Per-bin noise power, dB.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "noiseless")]
    pub noise_floor_db: Option<f64>,
    /// Synthesise without noise.
    #[arg(long)]
    pub noiseless: bool,
    /// Carrier frequency, Hz.
    #[arg(long, value_parser = parse_positive)]
    pub carrier: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractFlags {
    /// Worker threads for per-set detection.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Detection threshold above the noise level, dB.
    #[arg(long, conflicts_with = "false_alarm")]
    pub threshold_db: Option<f64>,
    /// Threshold set for this per-snapshot false-alarm probability instead.
    #[arg(long, value_parser = parse_positive)]
    pub false_alarm: Option<f64>,
    /// Long-term tracking delay gate, ns.
    #[arg(long, value_parser = parse_positive)]
    pub chi_ns: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalysisFlags {
    /// Excess delays at or below this value are left out and the fit is
    /// truncated there, ns.
    #[arg(long)]
    pub delay_floor: Option<f64>,
    /// Distance bin width, m.
    #[arg(long, value_parser = parse_positive)]
    pub bin_width: Option<f64>,
    /// Delay guard for broken tracks, bins (0 disables).
    #[arg(long)]
    pub guard_bins: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Scale the birth rate so the alive count follows the number law.
    #[arg(long)]
    pub calibrate: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File stem; defaults to `<scenario>-<seed>`.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Recording file.
    #[arg(long)]
    pub input: PathBuf,
    /// Track database; defaults to the input with extension `tracks.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Carrier frequency of the recording, Hz.
    #[arg(long, value_parser = parse_positive)]
    pub carrier: Option<f64>,
    #[command(flatten)]
    pub flags: ExtractFlags,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Track databases; several are pooled.
    #[arg(long, required = true, num_args = 1..)]
    pub tracks: Vec<PathBuf>,
    /// Reference model to compare against.
    #[command(flatten)]
    pub model: ModelArgs,
    /// The runs were simulated with a calibrated birth rate.
    #[arg(long)]
    pub calibrated: bool,
    /// Exit with status 1 if a checked parameter deviates by more than this.
    #[arg(long, value_parser = parse_positive)]
    pub tolerance: Option<f64>,
    /// Output directory for the report and CSV files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Seeded runs, using seeds `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// Simulate the birth law as given instead of calibrating it.
    #[arg(long)]
    pub uncalibrated: bool,
    /// Largest accepted relative deviation of a checked parameter.
    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    pub tolerance: f64,
    /// Working and output directory.
    #[arg(long, default_value = "roundtrip")]
    pub out: PathBuf,
    /// Keep the recording files instead of deleting them after extraction.
    #[arg(long)]
    pub keep_recordings: bool,
    #[command(flatten)]
    pub extract: ExtractFlags,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
}

#[derive(Debug, Args)]
pub struct SelfTestArgs {
    /// Seed of the randomised checks.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
