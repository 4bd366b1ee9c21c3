//! Unit conventions.
//!
//! Timestamps are integer picoseconds. Lifetimes and rates in configs are
//! nanoseconds and 1/ns. Frequencies are GHz at every public boundary and
//! angular (rad/s) for detunings carried by photon records.

use std::f64::consts::PI;

pub const PS_PER_NS: f64 = 1e3;
pub const S_PER_PS: f64 = 1e-12;
pub const S_PER_NS: f64 = 1e-9;

/// 2·sqrt(2·ln 2): Gaussian FWHM / sigma.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

pub fn ghz_to_rad_per_s(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e9
}

pub fn rad_per_s_to_ghz(w: f64) -> f64 {
    w / (2.0 * PI * 1e9)
}

pub fn ns_to_ps(ns: f64) -> f64 {
    ns * PS_PER_NS
}

pub fn ps_to_ns(ps: f64) -> f64 {
    ps / PS_PER_NS
}

/// Per-detector jitter sigma such that the two-detector coincidence
/// response (difference of two independent Gaussians) has the given FWHM.
pub fn jitter_sigma_for_irf(irf_fwhm_ps: f64) -> f64 {
    irf_fwhm_ps / (FWHM_PER_SIGMA * std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_round_trip() {
        let g = 3.28;
        assert!((rad_per_s_to_ghz(ghz_to_rad_per_s(g)) - g).abs() < 1e-12);
    }

    #[test]
    fn irf_jitter() {
        let s = jitter_sigma_for_irf(93.0);
        let fwhm = FWHM_PER_SIGMA * s * std::f64::consts::SQRT_2;
        assert!((fwhm - 93.0).abs() < 1e-9);
    }
}
