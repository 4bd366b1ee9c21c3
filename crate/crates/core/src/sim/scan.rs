//! Resonance-fluorescence scan: weak-drive steady state averaged over the
//! detuning distribution.

use std::f64::consts::PI;

use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stage};
use crate::sim::config::{EmitterConfig, EmitterMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSimOptions {
    /// Rabi frequency, rad/ns. `None` picks `0.05·√(γ₁γ₂)`.
    pub rabi: Option<f64>,
    /// Detuning samples per scan point.
    pub samples: usize,
    /// Counts at the peak of the unbroadened line.
    pub counts_scale: f64,
    /// Draw Poisson counts instead of returning the mean.
    pub shot_noise: bool,
}

impl Default for ScanSimOptions {
    fn default() -> Self {
        Self {
            rabi: None,
            samples: 2000,
            counts_scale: 1e5,
            shot_noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub detuning_ghz: f64,
    pub counts: f64,
}

/// Steady-state excited population of a driven two-level system; rates in
/// 1/ns, detuning and Rabi frequency in rad/ns.
pub fn steady_state_population(detuning: f64, rabi: f64, gamma1: f64, gamma2: f64) -> f64 {
    let drive = rabi * rabi * gamma2 / gamma1;
    0.5 * drive / (detuning * detuning + gamma2 * gamma2 + drive)
}

pub fn simulate_rf_scan(
    cfg: &EmitterConfig,
    detunings_ghz: &[f64],
    seed: u64,
) -> Result<Vec<ScanPoint>> {
    simulate_rf_scan_with(cfg, detunings_ghz, seed, &ScanSimOptions::default())
}

pub fn simulate_rf_scan_with(
    cfg: &EmitterConfig,
    detunings_ghz: &[f64],
    seed: u64,
    opts: &ScanSimOptions,
) -> Result<Vec<ScanPoint>> {
    cfg.validate()?;
    if cfg.mode != EmitterMode::TwoLevel {
        return Err(Error::Precondition(
            "resonance scan needs two_level mode".into(),
        ));
    }
    if opts.samples == 0 || !(opts.counts_scale > 0.0) {
        return Err(Error::Precondition(
            "scan needs samples > 0 and counts_scale > 0".into(),
        ));
    }
    let g1 = cfg.gamma1();
    let g2 = 0.5 * g1 + cfg.pure_dephasing_rate;
    let rabi = opts.rabi.unwrap_or(0.05 * (g1 * g2).sqrt());
    let peak = steady_state_population(0.0, rabi, g1, g2);
    let sigma = cfg.spectral_diffusion.sigma * 1e-9; // rad/ns
    Ok(detunings_ghz
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let delta = 2.0 * PI * d;
            let mut rng = stream(seed, Stage::Scan, i as u64);
            let rho = if sigma > 0.0 {
                let sum: f64 = (0..opts.samples)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        steady_state_population(delta - sigma * z, rabi, g1, g2)
                    })
                    .sum();
                sum / opts.samples as f64
            } else {
                steady_state_population(delta, rabi, g1, g2)
            };
            let mean = opts.counts_scale * rho / peak;
            let counts = if opts.shot_noise && mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(&mut rng)
            } else {
                mean
            };
            ScanPoint {
                detuning_ghz: d,
                counts,
            }
        })
        .collect())
}

/// Lorentzian FWHM (GHz) of the unbroadened scan including power
/// broadening.
pub fn lorentzian_scan_fwhm(cfg: &EmitterConfig, rabi: f64) -> f64 {
    let g1 = cfg.gamma1();
    let g2 = 0.5 * g1 + cfg.pure_dephasing_rate;
    2.0 * (g2 * g2 + rabi * rabi * g2 / g1).sqrt() / (2.0 * PI)
}
