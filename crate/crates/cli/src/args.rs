use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "coherence",
    version,
    about = "Single-photon emitter coherence workbench"
)]
pub struct Cli {
    /// Worker threads (defaults to COHERENCE_THREADS, then the core count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an emitter and write detector tags or a derived measurement.
    Simulate(SimulateArgs),
    /// Build a normalized correlation histogram from a tag file.
    Correlate(CorrelateArgs),
    /// Fit a model to measured or simulated data.
    Fit(FitArgs),
    /// Aggregate fit files into a coherence table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pol {
    Co,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    /// Detector tags of the configured routing.
    Tags,
    /// Output-port tags of the unbalanced interferometer.
    Hom,
    /// Michelson visibility against delay (CSV).
    Mi,
    /// Resonance-scan counts against detuning (CSV).
    Scan,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON simulation config; omitted fields take defaults.
    #[serde(skip)]
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1e9)]
    pub duration_ns: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "tags")]
    pub measurement: Measurement,
    /// Polarization for `--measurement hom`.
    #[arg(long, value_enum)]
    pub pol: Option<Pol>,
    #[arg(long, default_value_t = 14.3)]
    pub delta_t_ns: f64,
    /// Number of points for `mi` and `scan`.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Largest delay for `mi`; defaults to about three coherence times.
    #[arg(long)]
    pub max_delay_ps: Option<f64>,
    /// Half-span of the detuning grid for `scan`; defaults to five linewidths.
    #[arg(long)]
    pub span_ghz: Option<f64>,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelateMode {
    Hbt,
    Hom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Mean of the far-delay bins.
    FarWing,
    /// Accidental level from the channel rates.
    Poisson,
    /// Raw counts.
    None,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(value_enum)]
    pub mode: CorrelateMode,
    #[serde(skip)]
    #[arg(long)]
    pub input: PathBuf,
    #[serde(skip)]
    #[arg(long)]
    pub out: PathBuf,
    /// Required in hom mode.
    #[arg(long, value_enum)]
    pub pol: Option<Pol>,
    #[arg(long, default_value_t = 50)]
    pub bin_ps: u64,
    /// Histogram covers ±window.
    #[arg(long, default_value_t = 500)]
    pub window_ns: u64,
    #[arg(long, value_enum, default_value = "far-wing")]
    pub norm: NormMode,
    /// Far-wing window as `inner,outer`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [400.0, 500.0])]
    pub norm_window_ns: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub channel_a: u16,
    #[arg(long, default_value_t = 1)]
    pub channel_b: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Tcspc,
    Scan,
    Mi,
    Hbt,
    Hom,
    Rabi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rise {
    Both,
    FastOnly,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(value_enum)]
    pub model: FitModel,
    /// Input data: histogram for hbt, two-column CSV otherwise.
    #[serde(skip)]
    #[arg(long, required_unless_present = "co")]
    pub data: Option<PathBuf>,
    /// Co-polarized histogram (hom).
    #[serde(skip)]
    #[arg(long, requires = "cross")]
    pub co: Option<PathBuf>,
    /// Cross-polarized histogram (hom).
    #[serde(skip)]
    #[arg(long, requires = "co")]
    pub cross: Option<PathBuf>,
    /// Fit JSON destination; stdout when omitted.
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 93.0)]
    pub irf_fwhm_ps: f64,
    #[arg(long, default_value_t = 14.3)]
    pub delta_t_ns: f64,
    /// hbt: drop the bunching terms.
    #[arg(long)]
    pub no_bunching: bool,
    /// hom: use the antibunching time as dip width.
    #[arg(long)]
    pub tie_dip: bool,
    /// tcspc: where the rise factor applies.
    #[arg(long, value_enum, default_value = "both")]
    pub rise: Rise,
    /// rabi: pulse FWHM.
    #[arg(long, default_value_t = 10.0)]
    pub pulse_fwhm_ps: f64,
    /// rabi: radiative lifetime.
    #[arg(long, default_value_t = 1.71)]
    pub t1_ns: f64,
    /// rabi: also fit pure dephasing.
    #[arg(long)]
    pub fit_dephasing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[serde(skip)]
    #[arg(required = true)]
    pub fits: Vec<PathBuf>,
    /// Also write the table as JSON.
    #[serde(skip)]
    #[arg(long)]
    pub json: Option<PathBuf>,
}
