use std::f64::consts::PI;

use super::voigt::g1_voigt_unchecked;
use crate::error::{Error, Result};
use crate::types::VoigtParams;

/// |g¹(τ)| either in closed form or sampled on a delay grid (ps).
///
/// A sampled curve whose delays are all non-negative is taken to be one
/// half of a symmetric function.
#[derive(Debug, Clone, PartialEq)]
pub enum G1Curve {
    Voigt(VoigtParams),
    Sampled {
        delays_ps: Vec<f64>,
        values: Vec<f64>,
    },
}

const SQUARED_CUTOFF: f64 = 1e-12;
const SAMPLED_DECAY_LIMIT: f64 = 1e-6;

/// Coherence time T₂ = ∫|g¹(τ)|² dτ over the whole delay axis, in ns.
pub fn coherence_time(g1: &G1Curve) -> Result<f64> {
    match g1 {
        G1Curve::Voigt(p) => {
            p.validate()?;
            Ok(closed_form_t2(p.gamma_hom, p.gamma_inhom))
        }
        G1Curve::Sampled { delays_ps, values } => sampled_t2(delays_ps, values),
    }
}

fn closed_form_t2(gamma_hom: f64, gamma_inhom: f64) -> f64 {
    let f = |tau_ps: f64| {
        let g = g1_voigt_unchecked(tau_ps, gamma_hom, gamma_inhom);
        g * g
    };
    // truncate where |g¹|² drops below the cutoff
    let mut cut = 1.0;
    while f(cut) >= SQUARED_CUTOFF {
        cut *= 2.0;
    }
    let half = adaptive_simpson(&f, 0.0, cut, 1e-12 * cut, 50);
    2.0 * half * 1e-3
}

/// Adaptive Simpson with the Richardson correction (S₂ - S₁)/15 applied on
/// every accepted panel.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

fn sampled_t2(delays: &[f64], values: &[f64]) -> Result<f64> {
    if delays.len() != values.len() || delays.len() < 2 {
        return Err(Error::Domain(
            "sampled g1 needs at least two (delay, value) pairs".into(),
        ));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("sampled g1 delays must increase".into()));
    }
    let first = values[0].abs();
    let last = values[values.len() - 1].abs();
    let one_sided = delays[0] >= 0.0;
    if last > SAMPLED_DECAY_LIMIT || (!one_sided && first > SAMPLED_DECAY_LIMIT) {
        return Err(Error::Truncation(format!(
            "|g1| has not decayed below {SAMPLED_DECAY_LIMIT} at the grid edge (edge values {first}, {last})"
        )));
    }
    let integral: f64 = delays
        .windows(2)
        .zip(values.windows(2))
        .map(|(d, v)| 0.5 * (d[1] - d[0]) * (v[0] * v[0] + v[1] * v[1]))
        .sum();
    let total = if one_sided { 2.0 * integral } else { integral };
    Ok(total * 1e-3)
}

/// Fourier-limited coherence time and linewidth for a radiative lifetime:
/// T₂,FT = 2·T₁ (ns) and Γ_FT = 1/(π·T₂,FT) (GHz).
pub fn fourier_limit(t1_ns: f64) -> Result<(f64, f64)> {
    if !(t1_ns > 0.0) || !t1_ns.is_finite() {
        return Err(Error::Domain(format!(
            "lifetime must be positive, got {t1_ns}"
        )));
    }
    let t2_ft = 2.0 * t1_ns;
    Ok((t2_ft, 1.0 / (PI * t2_ft)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t2(gh: f64, gi: f64) -> f64 {
        coherence_time(&G1Curve::Voigt(VoigtParams::widths(gh, gi))).unwrap()
    }

    /// Plain composite trapezoid on a fine grid, used as a quadrature oracle.
    fn trapezoid_t2(gh: f64, gi: f64) -> f64 {
        let h = 0.01;
        let n = 2_000_000;
        let s: f64 = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                let g = g1_voigt_unchecked(t, gh, gi);
                if i == 0 {
                    0.5 * g * g
                } else {
                    g * g
                }
            })
            .sum();
        2.0 * s * h * 1e-3
    }

    #[test]
    fn lorentzian_t2() {
        let t = 0.8;
        let v = t2(1.0 / (PI * t), 0.0);
        assert!((v - t).abs() / t < 1e-6, "{v}");
    }

    #[test]
    fn gaussian_t2() {
        // sqrt(pi)/sigma_w with sigma_w = 2π·9.31 GHz / (2 sqrt(2 ln 2))
        let v = t2(0.0, 9.31);
        assert!((v - 0.071_351_500_565_838_88).abs() < 1e-9, "{v}");
        assert!((v - trapezoid_t2(0.0, 9.31)).abs() / v < 1e-6);
    }

    #[test]
    fn table_rf_means() {
        let v = t2(0.40, 3.28);
        assert!((v - 0.173_476_070_217_467).abs() / v < 1e-6, "{v}");
        assert!((v - trapezoid_t2(0.40, 3.28)).abs() / v < 1e-6);
        assert!((v - 0.176).abs() / 0.176 < 0.05);
    }

    #[test]
    fn fourier_limit_values() {
        let (t2, g) = fourier_limit(1.71).unwrap();
        assert_eq!(t2, 3.42);
        assert!((g - 0.093_07).abs() < 1e-5);
        let (_, g) = fourier_limit(1.0 / (2.0 * PI)).unwrap();
        assert!((g - 1.0).abs() < 1e-14);
        let (t2, g) = fourier_limit(1.56).unwrap();
        assert_eq!(t2, 3.12);
        assert!((g - 0.102_02).abs() < 1e-5);
        assert!(fourier_limit(0.0).is_err());
        assert!(fourier_limit(-1.0).is_err());
    }

    #[test]
    fn sampled_curve() {
        let t = 0.5;
        let delays: Vec<f64> = (0..20_000).map(|i| i as f64 * 0.5).collect();
        let values: Vec<f64> = delays.iter().map(|d| (-d * 1e-3 / t).exp()).collect();
        let v = coherence_time(&G1Curve::Sampled {
            delays_ps: delays.clone(),
            values,
        })
        .unwrap();
        assert!((v - t).abs() / t < 1e-5, "{v}");

        let slow: Vec<f64> = delays.iter().map(|d| (-d * 1e-3 / 50.0).exp()).collect();
        let err = coherence_time(&G1Curve::Sampled {
            delays_ps: delays,
            values: slow,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn t2_decreases_with_width(a in 0.01f64..5.0, b in 0.01f64..20.0, da in 0.01f64..1.0, db in 0.01f64..2.0) {
            let base = t2(a, b);
            prop_assert!(t2(a + da, b) < base);
            prop_assert!(t2(a, b + db) < base);
        }

        #[test]
        fn lorentzian_closed_form(a in 0.01f64..50.0) {
            let v = t2(a, 0.0);
            let exact = 1.0 / (PI * a);
            prop_assert!((v - exact).abs() / exact < 1e-6);
        }
    }
}
