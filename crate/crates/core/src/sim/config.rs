use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::jitter_sigma_for_irf;

/// Two-state telegraph gate on the pump. `on_rate` is the off→on switching
/// rate and `off_rate` the on→off rate, both 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blinker {
    pub on_rate: f64,
    pub off_rate: f64,
}

impl Blinker {
    /// Gate producing a bunching term `1 + c·e^{−|τ|/T_c}` in g².
    pub fn from_bunching(c: f64, t_c: f64) -> Self {
        let total = 1.0 / t_c;
        Self {
            on_rate: total / (1.0 + c),
            off_rate: c * total / (1.0 + c),
        }
    }

    pub fn on_fraction(&self) -> f64 {
        self.on_rate / (self.on_rate + self.off_rate)
    }

    /// Bunching amplitude `off/on`.
    pub fn amplitude(&self) -> f64 {
        self.off_rate / self.on_rate
    }

    /// Correlation time `1/(on + off)`, ns.
    pub fn timescale(&self) -> f64 {
        1.0 / (self.on_rate + self.off_rate)
    }
}

/// Ornstein–Uhlenbeck detuning: stationary standard deviation `sigma`
/// (rad/s) and correlation time `corr_time` (ns).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDiffusion {
    pub sigma: f64,
    pub corr_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterMode {
    #[default]
    TwoLevel,
    /// Pump prepares XX, which decays through X.
    Cascade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterConfig {
    /// ns
    pub t1_x: f64,
    /// ns
    pub t1_xx: f64,
    /// 1/ns
    pub pump_rate: f64,
    pub blinkers: Vec<Blinker>,
    pub spectral_diffusion: SpectralDiffusion,
    /// 1/ns
    pub pure_dephasing_rate: f64,
    pub mode: EmitterMode,
}

pub fn default_blinkers() -> Vec<Blinker> {
    vec![
        Blinker::from_bunching(0.3, 6.6),
        Blinker::from_bunching(0.2, 24.0),
        Blinker::from_bunching(0.15, 117.0),
    ]
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self {
            t1_x: 1.71,
            t1_xx: 0.9,
            pump_rate: 0.01,
            blinkers: default_blinkers(),
            spectral_diffusion: SpectralDiffusion::default(),
            pure_dephasing_rate: 0.0,
            mode: EmitterMode::TwoLevel,
        }
    }
}

fn check(ok: bool, path: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, msg))
    }
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl EmitterConfig {
    pub fn validate(&self) -> Result<()> {
        check(
            self.t1_x.is_finite() && self.t1_x > 0.0,
            "emitter.t1_x",
            "must be > 0",
        )?;
        check(
            self.t1_xx.is_finite() && self.t1_xx > 0.0,
            "emitter.t1_xx",
            "must be > 0",
        )?;
        check(
            finite_nonneg(self.pump_rate),
            "emitter.pump_rate",
            "must be ≥ 0",
        )?;
        for (i, b) in self.blinkers.iter().enumerate() {
            check(
                b.on_rate.is_finite() && b.on_rate > 0.0,
                &format!("emitter.blinkers[{i}].on_rate"),
                "must be > 0 (on-fraction must be positive)",
            )?;
            check(
                finite_nonneg(b.off_rate),
                &format!("emitter.blinkers[{i}].off_rate"),
                "must be ≥ 0",
            )?;
        }
        let sd = &self.spectral_diffusion;
        check(
            finite_nonneg(sd.sigma),
            "emitter.spectral_diffusion.sigma",
            "must be ≥ 0",
        )?;
        check(
            sd.sigma == 0.0 || (sd.corr_time.is_finite() && sd.corr_time > 0.0),
            "emitter.spectral_diffusion.corr_time",
            "must be > 0 when sigma > 0",
        )?;
        check(
            finite_nonneg(self.pure_dephasing_rate),
            "emitter.pure_dephasing_rate",
            "must be ≥ 0",
        )?;
        Ok(())
    }

    pub fn gamma1(&self) -> f64 {
        1.0 / self.t1_x
    }

    /// Coherence time from lifetime and pure dephasing only, ns.
    pub fn t2(&self) -> f64 {
        1.0 / (0.5 / self.t1_x + self.pure_dephasing_rate)
    }

    pub fn on_fraction(&self) -> f64 {
        self.blinkers.iter().map(Blinker::on_fraction).product()
    }

    /// Mean emission rate (1/ns) of the X line in steady state.
    pub fn mean_rate(&self) -> f64 {
        let p = self.pump_rate;
        let base = match self.mode {
            EmitterMode::TwoLevel => p / (1.0 + p * self.t1_x),
            EmitterMode::Cascade => p / (1.0 + p * (self.t1_x + self.t1_xx)),
        };
        base * self.on_fraction()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub efficiency: f64,
    /// Per-detector Gaussian jitter, ps.
    pub jitter_sigma: f64,
    /// ps
    pub dead_time: f64,
    /// 1/ns per channel
    pub dark_rate: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            jitter_sigma: jitter_sigma_for_irf(93.0),
            dead_time: 0.0,
            dark_rate: 1e-7,
        }
    }
}

impl DetectionConfig {
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            jitter_sigma: 0.0,
            dead_time: 0.0,
            dark_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.efficiency > 0.0 && self.efficiency <= 1.0,
            "detection.efficiency",
            "must lie in (0, 1]",
        )?;
        check(
            finite_nonneg(self.jitter_sigma),
            "detection.jitter_sigma",
            "must be ≥ 0",
        )?;
        check(
            finite_nonneg(self.dead_time),
            "detection.dead_time",
            "must be ≥ 0",
        )?;
        check(
            finite_nonneg(self.dark_rate),
            "detection.dark_rate",
            "must be ≥ 0",
        )?;
        Ok(())
    }
}

/// How detected photons are assigned to channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    /// Everything on channel 0.
    Single,
    /// 50:50 split onto channels 0 and 1.
    #[default]
    BeamSplitter,
    /// X (and X⁺) on channel 0, XX on channel 1.
    ByTransition,
}

impl Routing {
    pub fn channels(&self) -> u16 {
        match self {
            Routing::Single => 1,
            Routing::BeamSplitter | Routing::ByTransition => 2,
        }
    }
}

/// Everything `simulate` needs besides duration and seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub emitter: EmitterConfig,
    pub detection: DetectionConfig,
    pub routing: Routing,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.emitter.validate()?;
        self.detection.validate()
    }
}
