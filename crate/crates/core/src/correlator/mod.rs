//! Second-order correlation histograms and IRF convolution.

mod histogram;
mod irf;
mod normalize;

pub use histogram::{cross_correlate, cross_correlate_times, CorrelationRequest};
pub use irf::{convolve_irf, convolve_on_grid, GaussianKernel};
pub use normalize::{normalize, Normalization, DEFAULT_NORM_WINDOW_PS};
