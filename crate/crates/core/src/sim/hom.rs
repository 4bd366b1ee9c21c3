//! Two-photon interference in an unbalanced Mach–Zehnder interferometer at
//! the level of pairwise wavepacket overlap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::HomPolarization;
use crate::rng::{stream, Stage};
use crate::sim::config::{DetectionConfig, EmitterConfig};
use crate::sim::detection::detect;
use crate::types::{PhotonStream, TagStream, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct HomSimOutput {
    /// Tags of the two output ports (channels 0 and 1).
    pub tags: TagStream,
    pub pairs: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomSimOptions {
    pub delta_t_ns: f64,
    pub polarization: HomPolarization,
}

/// Overlap of two exponential wavepackets offset by `tau_ns` with angular
/// detuning difference `d_omega` (rad/s).
pub fn pair_overlap(t1_ns: f64, t2_ns: f64, tau_ns: f64, d_omega: f64) -> f64 {
    let x = d_omega * 1e-9 * t1_ns;
    (t2_ns / (2.0 * t1_ns)) * (-tau_ns.abs() / t1_ns).exp() / (1.0 + x * x)
}

struct Arrival {
    t: f64,
    long: bool,
    detuning: f64,
}

/// Sends the X photons of `photons` through the interferometer and returns
/// the detected output-port tags.
pub fn simulate_hom(
    photons: &PhotonStream,
    cfg: &EmitterConfig,
    opts: &HomSimOptions,
    det: &DetectionConfig,
    seed: u64,
) -> Result<HomSimOutput> {
    cfg.validate()?;
    det.validate()?;
    if !(opts.delta_t_ns > 0.0) {
        return Err(Error::Precondition("delta_t must be positive".into()));
    }
    let (t1, t2) = (cfg.t1_x, cfg.t2());
    let mut warnings = Vec::new();
    if opts.delta_t_ns < 2.0 * t1 {
        warnings.push(format!(
            "delay line {} ns is shorter than two lifetimes ({:.3} ns); consecutive photons overlap",
            opts.delta_t_ns,
            2.0 * t1
        ));
    }

    let mut rng = stream(seed, Stage::Interferometer, 0);
    let shift = opts.delta_t_ns * 1e3;
    let mut arrivals: Vec<Arrival> = photons
        .photons
        .iter()
        .filter(|p| p.transition == Transition::X)
        .map(|p| {
            let long = rng.gen::<bool>();
            Arrival {
                t: p.t_emit + if long { shift } else { 0.0 },
                long,
                detuning: p.detuning,
            }
        })
        .collect();
    arrivals.sort_by(|a, b| a.t.total_cmp(&b.t));

    // Pairs are adjacent opposite-arm arrivals whose gap is shorter than
    // both neighbouring gaps, so each photon meets its closest partner.
    let window = 10.0 * t1 * 1e3;
    let gap = |i: usize| arrivals[i + 1].t - arrivals[i].t;
    let n = arrivals.len();
    let mut routed = Vec::with_capacity(n);
    let mut pairs = 0;
    let mut i = 0;
    while i < n {
        let a = &arrivals[i];
        if i + 1 < n {
            let b = &arrivals[i + 1];
            let g = gap(i);
            let closest = (i == 0 || g < gap(i - 1)) && (i + 2 >= n || g <= gap(i + 1));
            if a.long != b.long && g < window && closest {
                let v = match opts.polarization {
                    HomPolarization::Cross => 0.0,
                    HomPolarization::Co => pair_overlap(t1, t2, g * 1e-3, a.detuning - b.detuning),
                };
                let (pa, pb) = if rng.gen::<f64>() < v {
                    let p = rng.gen_range(0..2u16);
                    (p, p)
                } else {
                    (rng.gen_range(0..2u16), rng.gen_range(0..2u16))
                };
                routed.push((a.t, pa));
                routed.push((b.t, pb));
                pairs += 1;
                i += 2;
                continue;
            }
        }
        routed.push((a.t, rng.gen_range(0..2u16)));
        i += 1;
    }

    let duration_ps = ((photons.duration_ns + opts.delta_t_ns) * 1e3).round() as u64;
    let mut det_rng = stream(seed, Stage::Detection, 1);
    let tags = detect(&routed, 2, duration_ps, det, seed, &mut det_rng);
    Ok(HomSimOutput {
        tags: TagStream::new(2, duration_ps, tags),
        pairs,
        warnings,
    })
}
