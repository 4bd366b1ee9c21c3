//! Coherence workbench for single-photon emitters.
//!
//! The crate has two halves that are meant to be used together:
//!
//! * a stochastic emitter simulator ([`sim`]) producing photon records and
//!   detector time tags with blinking, spectral diffusion and dephasing, and
//! * the analysis chain that turns tags into normalized correlation
//!   histograms ([`correlator`]) and fits them ([`fitting`]), together with
//!   lineshape ([`lineshape`]) and optical Bloch ([`bloch`]) machinery.
//!
//! Every fit model can therefore be checked against simulated ground truth.

pub mod bloch;
pub mod correlator;
pub mod error;
pub mod fitting;
pub mod lineshape;
pub mod report;
pub mod rng;
pub mod sim;
pub mod types;
pub mod units;

pub use error::{Error, Result};
pub use types::{
    read_tags, write_tags, CoherenceSummary, Estimate, FitResult, Histogram, HistogramMeta,
    PhotonRecord, Polarization, TagStream, TimeTag, Transition, VoigtParams,
};
