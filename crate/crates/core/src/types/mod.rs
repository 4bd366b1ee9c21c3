//! Shared data model and file formats.

mod coherence;
mod fit_result;
mod histogram;
mod photon;
mod tags;
mod xy;

pub use coherence::{CoherenceSummary, VoigtParams};
pub use fit_result::{Estimate, FitResult, Provenance};
pub use histogram::{
    read_histogram, read_histogram_from, write_histogram, write_histogram_to, Histogram,
    HistogramMeta,
};
pub use photon::{PhotonRecord, PhotonStream, Polarization, Transition};
pub use tags::{read_tags, read_tags_from, write_tags, write_tags_to, TagStream, TimeTag};
pub use xy::{read_xy, read_xy_from, write_xy, write_xy_to, XyData};
