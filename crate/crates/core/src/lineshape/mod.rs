//! Lineshape and coherence-time machinery.
//!
//! Widths are FWHM in GHz throughout. A Voigt profile is the convolution of
//! a Lorentzian (homogeneous width) and a Gaussian (inhomogeneous width);
//! its Fourier transform, the first-order coherence g¹(τ), factorizes into
//! an exponential and a Gaussian in the delay.

mod coherence;
mod faddeeva;
mod voigt;

pub use coherence::{coherence_time, fourier_limit, G1Curve};
pub use faddeeva::faddeeva;
pub use voigt::{
    g1_voigt, g1_voigt_unchecked, voigt_eval, voigt_fwhm, voigt_fwhm_exact, voigt_fwhm_with,
    FwhmMethod, VoigtProfile,
};
