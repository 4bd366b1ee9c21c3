//! Shared fixtures for the criterion benches.

use coherence_core::sim::{
    apply_detection, simulate_stream, DetectionConfig, EmitterConfig, Routing,
};
use coherence_core::TagStream;

/// Two-channel detector tags from a non-blinking emitter at 0.1/ns pump.
pub fn fixture_tags(duration_ns: f64, seed: u64) -> TagStream {
    let cfg = EmitterConfig {
        pump_rate: 0.1,
        blinkers: vec![],
        ..EmitterConfig::default()
    };
    let photons = simulate_stream(&cfg, duration_ns, seed).expect("valid fixture config");
    apply_detection(
        &photons,
        &DetectionConfig::default(),
        Routing::BeamSplitter,
        seed,
    )
    .expect("valid detection config")
}
