//! Michelson fringe visibility from simulated phase trajectories.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stage};
use crate::sim::config::{EmitterConfig, EmitterMode};

pub const DEFAULT_MI_SAMPLES: usize = 20_000;

/// One simulated visibility point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiPoint {
    pub delay_ps: f64,
    pub visibility: f64,
    /// Monte Carlo standard error of `visibility`.
    pub stderr: f64,
    /// Standard error above 5 % of the value.
    pub insufficient: bool,
}

/// Variance of the phase accumulated over `tau_ns`: the integral of the OU
/// detuning plus white-noise dephasing.
pub(crate) fn phase_variance(cfg: &EmitterConfig, tau_ns: f64) -> f64 {
    let sd = cfg.spectral_diffusion;
    let ou = if sd.sigma > 0.0 {
        let s = sd.sigma * 1e-9 * sd.corr_time; // rad
        let a = tau_ns / sd.corr_time;
        2.0 * s * s * (a - 1.0 + (-a).exp())
    } else {
        0.0
    };
    ou + 2.0 * cfg.pure_dephasing_rate * tau_ns
}

pub fn simulate_mi_visibility(
    cfg: &EmitterConfig,
    delays_ps: &[f64],
    seed: u64,
) -> Result<Vec<MiPoint>> {
    simulate_mi_visibility_with(cfg, delays_ps, seed, DEFAULT_MI_SAMPLES)
}

/// As [`simulate_mi_visibility`] with an explicit number of trajectories per
/// delay.
pub fn simulate_mi_visibility_with(
    cfg: &EmitterConfig,
    delays_ps: &[f64],
    seed: u64,
    samples: usize,
) -> Result<Vec<MiPoint>> {
    cfg.validate()?;
    if cfg.mode != EmitterMode::TwoLevel {
        return Err(Error::Precondition(
            "Michelson simulation needs two_level mode".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::Precondition(
            "need at least two samples per delay".into(),
        ));
    }
    Ok(delays_ps
        .par_iter()
        .enumerate()
        .map(|(i, &delay)| {
            let tau = delay.abs() * 1e-3;
            let envelope = (-tau / (2.0 * cfg.t1_x)).exp();
            let sd = phase_variance(cfg, tau).sqrt();
            let mut rng = stream(seed, Stage::Michelson, i as u64);
            let (mut c, mut s, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..samples {
                let z: f64 = StandardNormal.sample(&mut rng);
                let (si, co) = (sd * z).sin_cos();
                c += co;
                s += si;
                cc += co * co;
                ss += si * si;
            }
            let n = samples as f64;
            let (mc, ms) = (c / n, s / n);
            let m = mc.hypot(ms);
            let var = (cc / n - mc * mc + ss / n - ms * ms).max(0.0) * n / (n - 1.0);
            let visibility = envelope * m;
            let stderr = envelope * (var / n).sqrt();
            MiPoint {
                delay_ps: delay,
                visibility,
                stderr,
                insufficient: stderr > 0.05 * visibility,
            }
        })
        .collect())
}
