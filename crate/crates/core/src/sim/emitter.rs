//! Event-driven emitter dynamics.
//!
//! The time axis is cut into fixed segments, each simulated from its own
//! RNG streams, so the result does not depend on how many threads run
//! them. Each segment starts with the emitter in the ground state and the
//! blinkers drawn from their stationary distribution. A cascade (or
//! excitation) still running at the segment end is discarded so that XX
//! and X counts stay equal. Segments are far longer than every blinking
//! timescale, so the seams are statistically invisible.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream, Stage};
use crate::sim::config::{Blinker, EmitterConfig, EmitterMode};
use crate::types::{PhotonRecord, PhotonStream, Polarization, Transition};

/// Segment length, ns.
pub const SEGMENT_NS: f64 = 1e6;
const MAX_EVENTS: f64 = 1e9;

fn exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// On-intervals of one telegraph gate inside `[start, end)`.
fn gate_intervals(b: &Blinker, start: f64, end: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    if b.off_rate == 0.0 {
        return vec![(start, end)];
    }
    let mut out = Vec::new();
    let mut on = rng.gen::<f64>() < b.on_fraction();
    let mut t = start;
    while t < end {
        let dwell = exp(rng, if on { b.off_rate } else { b.on_rate });
        let next = (t + dwell).min(end);
        if on {
            out.push((t, next));
        }
        t = next;
        on = !on;
    }
    out
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Intervals during which every gate is on.
pub(crate) fn pump_windows(
    blinkers: &[Blinker],
    start: f64,
    end: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, f64)> {
    let mut windows = vec![(start, end)];
    for b in blinkers {
        let g = gate_intervals(b, start, end, rng);
        windows = intersect(&windows, &g);
    }
    windows
}

/// Walks the pump windows, consuming on-time.
struct PumpClock<'a> {
    windows: &'a [(f64, f64)],
    idx: usize,
}

impl PumpClock<'_> {
    /// First time ≥ `t` after `need` ns of accumulated on-time, or `None`
    /// past the last window.
    fn advance(&mut self, t: f64, mut need: f64) -> Option<f64> {
        while self.idx < self.windows.len() && self.windows[self.idx].1 <= t {
            self.idx += 1;
        }
        while self.idx < self.windows.len() {
            let (lo, hi) = self.windows[self.idx];
            let from = lo.max(t);
            if from + need < hi {
                return Some(from + need);
            }
            need -= hi - from;
            self.idx += 1;
        }
        None
    }
}

fn segment(cfg: &EmitterConfig, seed: u64, index: u64, start: f64, end: f64) -> Vec<PhotonRecord> {
    let mut gate_rng = stream(seed, Stage::Gates, index);
    let mut rng = stream(seed, Stage::Emitter, index);
    let windows = pump_windows(&cfg.blinkers, start, end, &mut gate_rng);
    let mut clock = PumpClock {
        windows: &windows,
        idx: 0,
    };
    let mut out = Vec::new();
    let mut t = start;
    let record = |t_ns: f64, transition| PhotonRecord {
        t_emit: t_ns * 1e3,
        transition,
        detuning: 0.0,
        polarization: Polarization::H,
    };
    loop {
        let need = exp(&mut rng, cfg.pump_rate);
        let Some(t_exc) = clock.advance(t, need) else {
            break;
        };
        match cfg.mode {
            EmitterMode::TwoLevel => {
                let t_x = t_exc + exp(&mut rng, 1.0 / cfg.t1_x);
                if t_x >= end {
                    break;
                }
                out.push(record(t_x, Transition::X));
                t = t_x;
            }
            EmitterMode::Cascade => {
                let t_xx = t_exc + exp(&mut rng, 1.0 / cfg.t1_xx);
                let t_x = t_xx + exp(&mut rng, 1.0 / cfg.t1_x);
                if t_x >= end {
                    break;
                }
                out.push(record(t_xx, Transition::XX));
                out.push(record(t_x, Transition::X));
                t = t_x;
            }
        }
    }
    out
}

/// Exact OU update over `dt` from `x`.
pub(crate) fn ou_step(x: f64, dt: f64, sigma: f64, corr_time: f64, rng: &mut ChaCha8Rng) -> f64 {
    let r = (-dt / corr_time).exp();
    let z: f64 = StandardNormal.sample(rng);
    x * r + sigma * (1.0 - r * r).max(0.0).sqrt() * z
}

/// Emission records for `duration_ns`, deterministic in `seed`.
pub fn simulate_stream(cfg: &EmitterConfig, duration_ns: f64, seed: u64) -> Result<PhotonStream> {
    cfg.validate()?;
    if !(duration_ns > 0.0) || !duration_ns.is_finite() {
        return Err(Error::Precondition("duration must be positive".into()));
    }
    let switching: f64 = cfg
        .blinkers
        .iter()
        .map(|b| 2.0 * b.on_rate * b.off_rate / (b.on_rate + b.off_rate))
        .sum();
    let expected = (cfg.pump_rate + switching) * duration_ns;
    if expected > MAX_EVENTS {
        return Err(Error::ResourceGuard(format!(
            "about {expected:.2e} stochastic events requested (limit {MAX_EVENTS:.0e})"
        )));
    }
    if cfg.pump_rate == 0.0 {
        return Ok(PhotonStream {
            duration_ns,
            photons: Vec::new(),
        });
    }

    let n_seg = (duration_ns / SEGMENT_NS).ceil() as u64;
    let segments: Vec<Vec<PhotonRecord>> = (0..n_seg)
        .into_par_iter()
        .map(|k| {
            let start = k as f64 * SEGMENT_NS;
            let end = ((k + 1) as f64 * SEGMENT_NS).min(duration_ns);
            segment(cfg, seed, k, start, end)
        })
        .collect();
    let mut photons: Vec<PhotonRecord> = segments.into_iter().flatten().collect();

    let sd = cfg.spectral_diffusion;
    if sd.sigma > 0.0 {
        let mut rng = stream(seed, Stage::Spectral, 0);
        let z: f64 = StandardNormal.sample(&mut rng);
        let mut x = sd.sigma * z;
        let mut last = 0.0;
        let bound = 10.0 * sd.sigma;
        for p in &mut photons {
            let t = p.t_emit * 1e-3;
            x = ou_step(x, t - last, sd.sigma, sd.corr_time, &mut rng);
            last = t;
            p.detuning = x.clamp(-bound, bound);
        }
    }
    Ok(PhotonStream {
        duration_ns,
        photons,
    })
}
