//! Detector model: efficiency, routing, jitter, dark counts and dead time.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::Result;
use crate::rng::{stream, Stage};
use crate::sim::config::{DetectionConfig, Routing};
use crate::types::{PhotonStream, TagStream, TimeTag, Transition};

/// Turns routed arrival times (ps) into a sorted tag stream. Arrivals are
/// thinned by the efficiency, jittered, dark counts are added per channel
/// and the dead time is enforced per channel.
pub(crate) fn detect(
    arrivals: &[(f64, u16)],
    channels: u16,
    duration_ps: u64,
    det: &DetectionConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<TimeTag> {
    let last = duration_ps.saturating_sub(1) as f64;
    let jitter = Normal::new(0.0, det.jitter_sigma).expect("validated jitter");
    let mut per_channel: Vec<Vec<u64>> = vec![Vec::new(); channels as usize];
    for &(t, ch) in arrivals {
        if det.efficiency < 1.0 && rng.gen::<f64>() >= det.efficiency {
            continue;
        }
        let t = if det.jitter_sigma > 0.0 {
            t + jitter.sample(rng)
        } else {
            t
        };
        per_channel[ch as usize].push(t.round().clamp(0.0, last) as u64);
    }

    let mean_dark = det.dark_rate * duration_ps as f64 * 1e-3;
    for (ch, times) in per_channel.iter_mut().enumerate() {
        if mean_dark > 0.0 {
            let mut noise = stream(seed, Stage::Noise, ch as u64);
            let n = Poisson::new(mean_dark)
                .expect("positive mean")
                .sample(&mut noise) as u64;
            times.extend((0..n).map(|_| noise.gen_range(0..duration_ps.max(1))));
        }
        times.sort_unstable();
        if det.dead_time > 0.0 {
            let mut kept: Option<u64> = None;
            times.retain(|&t| match kept {
                Some(k) if ((t - k) as f64) < det.dead_time => false,
                _ => {
                    kept = Some(t);
                    true
                }
            });
        }
    }

    let mut tags: Vec<TimeTag> = per_channel
        .into_iter()
        .enumerate()
        .flat_map(|(ch, times)| times.into_iter().map(move |t| TimeTag::new(ch as u16, t)))
        .collect();
    tags.sort_unstable_by_key(|t| (t.t, t.channel));
    tags
}

/// Detector tags for an emission stream.
pub fn apply_detection(
    photons: &PhotonStream,
    det: &DetectionConfig,
    routing: Routing,
    seed: u64,
) -> Result<TagStream> {
    det.validate()?;
    let duration_ps = (photons.duration_ns * 1e3).round() as u64;
    let channels = routing.channels();
    let mut rng = stream(seed, Stage::Detection, 0);
    let arrivals: Vec<(f64, u16)> = photons
        .photons
        .iter()
        .map(|p| {
            let ch = match routing {
                Routing::Single => 0,
                Routing::BeamSplitter => rng.gen_range(0..2u16),
                Routing::ByTransition => u16::from(p.transition == Transition::XX),
            };
            (p.t_emit, ch)
        })
        .collect();
    let tags = detect(&arrivals, channels, duration_ps, det, seed, &mut rng);
    Ok(TagStream::new(channels, duration_ps, tags))
}
