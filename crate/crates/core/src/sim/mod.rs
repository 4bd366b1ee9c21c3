//! Stochastic emitter simulation: emission records, detection, and the
//! Michelson, resonance-scan and HOM measurement models.

mod config;
mod detection;
mod emitter;
mod hom;
mod mi;
mod scan;

pub use config::{
    default_blinkers, Blinker, DetectionConfig, EmitterConfig, EmitterMode, Routing,
    SimulationConfig, SpectralDiffusion,
};
pub use detection::apply_detection;
pub use emitter::{simulate_stream, SEGMENT_NS};
pub use hom::{pair_overlap, simulate_hom, HomSimOptions, HomSimOutput};
pub use mi::{simulate_mi_visibility, simulate_mi_visibility_with, MiPoint, DEFAULT_MI_SAMPLES};
pub use scan::{
    lorentzian_scan_fwhm, simulate_rf_scan, simulate_rf_scan_with, steady_state_population,
    ScanPoint, ScanSimOptions,
};
