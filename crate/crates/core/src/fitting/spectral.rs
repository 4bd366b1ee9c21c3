//! Voigt fits in the spectral (laser scan) and time (fringe visibility)
//! domains.

use crate::error::{Error, Result};
use crate::fitting::lm::{nlls_fit, propagate, FitData, LmConfig, Model, ParamSpec};
use crate::lineshape::{coherence_time, g1_voigt_unchecked, voigt_fwhm, G1Curve, VoigtProfile};
use crate::types::{CoherenceSummary, FitResult, VoigtParams};

/// Smallest width used when a fit drives both widths to zero at once.
const MIN_WIDTH: f64 = 1e-9;

fn profile(gh: f64, gi: f64) -> VoigtProfile {
    let (gh, gi) = if gh <= 0.0 && gi <= 0.0 {
        (MIN_WIDTH, 0.0)
    } else {
        (gh.max(0.0), gi.max(0.0))
    };
    VoigtProfile::new(gh, gi).expect("non-degenerate widths")
}

fn t2_of(gh: f64, gi: f64) -> f64 {
    let (gh, gi) = if gh <= 0.0 && gi <= 0.0 {
        (MIN_WIDTH, 0.0)
    } else {
        (gh.max(0.0), gi.max(0.0))
    };
    coherence_time(&G1Curve::Voigt(VoigtParams::widths(gh, gi))).unwrap_or(f64::NAN)
}

fn fwhm_of(gh: f64, gi: f64) -> f64 {
    voigt_fwhm(gh.max(0.0), gi.max(0.0)).unwrap_or(0.0)
}

/// Parameters: center, amplitude, offset, gamma_hom, gamma_inhom (GHz).
struct ScanModel;

impl Model for ScanModel {
    fn predict(&self, p: &[f64], x: &[f64], out: &mut [f64]) {
        let prof = profile(p[3], p[4]);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = p[1] * prof.eval(xi - p[0]) + p[2];
        }
    }
}

/// Parameters: amplitude, gamma_hom, gamma_inhom (GHz); x is delay in ps.
struct MiModel;

impl Model for MiModel {
    fn predict(&self, p: &[f64], x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = p[0] * g1_voigt_unchecked(t, p[1].max(0.0), p[2].max(0.0));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoigtFit {
    pub fit: FitResult,
    pub voigt: VoigtParams,
    pub summary: CoherenceSummary,
}

/// Tries a Lorentzian-leaning and a Gaussian-leaning start and keeps the
/// better fit; the two widths trade off against each other and a single
/// start can settle in the wrong corner.
fn best_of(
    model: &dyn Model,
    data: &FitData,
    starts: [Vec<ParamSpec>; 2],
    lm: &LmConfig,
    name: &str,
) -> Result<(FitResult, Vec<ParamSpec>)> {
    let mut best: Option<(FitResult, Vec<ParamSpec>)> = None;
    let mut last_err = None;
    for specs in starts {
        match nlls_fit(model, data, &specs, lm, name) {
            Ok(f) => {
                let better = best.as_ref().is_none_or(|(b, _)| {
                    (f.converged && !b.converged)
                        || (f.converged == b.converged && f.chi2_red < b.chi2_red)
                });
                if better {
                    best = Some((f, specs));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

fn add_width_derivations(
    fit: &mut FitResult,
    specs: &[ParamSpec],
    ih: usize,
    ii: usize,
) -> Result<()> {
    let fwhm = propagate(fit, specs, |p| fwhm_of(p[ih], p[ii]));
    let t2 = propagate(fit, specs, |p| t2_of(p[ih], p[ii]));
    if !t2.value.is_finite() {
        return Err(Error::DegenerateFit(
            "fitted widths give no finite coherence time".into(),
        ));
    }
    fit.derived.insert("fwhm".into(), fwhm);
    fit.derived.insert("t2".into(), t2);
    Ok(())
}

fn flag_unbounded(fit: &mut FitResult) {
    let loose = fit.params.values().any(|e| {
        e.sigma
            .is_some_and(|s| !s.is_finite() || s > 1e3 * e.value.abs().max(1e-6))
    });
    if loose {
        fit.flags.push("unbounded-parameter".into());
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanOptions {
    pub lm: LmConfig,
}

/// Voigt fit of a resonance scan (detuning in GHz, counts).
pub fn fit_scan(x: &[f64], y: &[f64], opts: &ScanOptions) -> Result<VoigtFit> {
    if x.len() < 15 {
        return Err(Error::Precondition(format!(
            "scan has {} points; at least 15 are needed",
            x.len()
        )));
    }
    let data = FitData::poisson(x.to_vec(), y.to_vec())?;
    let k_max = (0..y.len()).max_by(|&i, &j| y[i].total_cmp(&y[j])).unwrap();
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let amp = y[k_max] - lo;
    let half = lo + 0.5 * amp;
    let left = (0..k_max).rev().find(|&i| y[i] < half).map(|i| x[i]);
    let right = (k_max..y.len()).find(|&i| y[i] < half).map(|i| x[i]);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::Precondition(
            "scan does not reach half maximum on both sides".into(),
        ));
    };
    let fwhm0 = (r - l).abs().max(1e-6);
    let xmin = x.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xmax - xmin < 3.0 * fwhm0 {
        return Err(Error::Precondition(format!(
            "scan spans {:.4} GHz, less than 3 FWHM ({:.4} GHz)",
            xmax - xmin,
            3.0 * fwhm0
        )));
    }
    let specs = |gh: f64, gi: f64| {
        vec![
            ParamSpec::new("center", x[k_max]).scale(fwhm0),
            ParamSpec::new("amplitude", amp).lower(0.0),
            ParamSpec::new("offset", lo.max(0.0))
                .lower(0.0)
                .scale(amp.max(1.0) * 1e-2),
            ParamSpec::new("gamma_hom", gh).lower(0.0).scale(fwhm0),
            ParamSpec::new("gamma_inhom", gi).lower(0.0).scale(fwhm0),
        ]
    };
    let starts = [
        specs(0.8 * fwhm0, 0.3 * fwhm0),
        specs(0.2 * fwhm0, 0.85 * fwhm0),
    ];
    let (mut fit, specs) = best_of(&ScanModel, &data, starts, &opts.lm, "scan")?;
    add_width_derivations(&mut fit, &specs, 3, 4)?;
    flag_unbounded(&mut fit);
    let v = fit.values();
    let voigt = VoigtParams {
        gamma_hom: v[3],
        gamma_inhom: v[4],
        center: v[0],
        amplitude: v[1],
        offset: v[2],
    };
    let summary = summary_of(&fit);
    Ok(VoigtFit {
        fit,
        voigt,
        summary,
    })
}

fn summary_of(fit: &FitResult) -> CoherenceSummary {
    CoherenceSummary {
        gamma_fwhm: fit.value("fwhm"),
        t2: fit.value("t2"),
        gamma_inhom: fit.value("gamma_inhom"),
        gamma_hom: fit.value("gamma_hom"),
        ..CoherenceSummary::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MiOptions {
    pub lm: LmConfig,
}

/// Fit of fringe visibility against delay (ps) with the Fourier transform
/// of a Voigt profile.
pub fn fit_mi(delays_ps: &[f64], visibility: &[f64], opts: &MiOptions) -> Result<VoigtFit> {
    let min_vis = visibility.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_vis < 0.2) {
        return Err(Error::Precondition(format!(
            "visibility only decays to {min_vis:.3}; delays must reach below 0.2"
        )));
    }
    let data = FitData::uniform(delays_ps.to_vec(), visibility.to_vec())?;
    let k0 = (0..delays_ps.len())
        .min_by(|&i, &j| delays_ps[i].abs().total_cmp(&delays_ps[j].abs()))
        .unwrap();
    let amp = visibility[k0].max(1e-3);
    let t_e = delays_ps
        .iter()
        .zip(visibility)
        .filter(|(_, v)| **v <= amp / std::f64::consts::E)
        .map(|(t, _)| t.abs())
        .fold(f64::INFINITY, f64::min);
    let t_e_ns = if t_e.is_finite() {
        t_e * 1e-3
    } else {
        delays_ps.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-3
    };
    let lorentz = 1.0 / (std::f64::consts::PI * t_e_ns);
    let gauss = 2.0 * std::f64::consts::LN_2.sqrt() / (std::f64::consts::PI * t_e_ns);
    let specs = |gh: f64, gi: f64| {
        vec![
            ParamSpec::new("amplitude", amp).lower(0.0),
            ParamSpec::new("gamma_hom", gh).lower(0.0).scale(lorentz),
            ParamSpec::new("gamma_inhom", gi).lower(0.0).scale(gauss),
        ]
    };
    let starts = [
        specs(0.8 * lorentz, 0.3 * gauss),
        specs(0.2 * lorentz, 0.9 * gauss),
    ];
    let (mut fit, specs) = best_of(&MiModel, &data, starts, &opts.lm, "mi")?;
    add_width_derivations(&mut fit, &specs, 1, 2)?;
    flag_unbounded(&mut fit);
    let v = fit.values();
    let voigt = VoigtParams {
        gamma_hom: v[1],
        gamma_inhom: v[2],
        center: 0.0,
        amplitude: v[0],
        offset: 0.0,
    };
    let summary = summary_of(&fit);
    Ok(VoigtFit {
        fit,
        voigt,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::voigt_eval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_scan(gh: f64, gi: f64, rel: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let p = VoigtParams {
            gamma_hom: gh,
            gamma_inhom: gi,
            center: 0.1,
            amplitude: 1000.0,
            offset: 20.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..121).map(|i| -12.0 + 0.2 * i as f64).collect();
        let y = x
            .iter()
            .map(|&xi| {
                let v = voigt_eval(xi, &p).unwrap();
                v * (1.0 + rel * n.sample(&mut rng))
            })
            .collect();
        (x, y)
    }

    #[test]
    fn scan_widths_within_three_sigma() {
        let (x, y) = noisy_scan(0.78, 3.49, 0.03, 5);
        let r = fit_scan(&x, &y, &ScanOptions::default()).unwrap();
        let h = r.fit.params["gamma_hom"];
        let i = r.fit.params["gamma_inhom"];
        assert!((h.value - 0.78).abs() < 3.0 * h.sigma.unwrap(), "{h:?}");
        assert!((i.value - 3.49).abs() < 3.0 * i.sigma.unwrap(), "{i:?}");
    }

    #[test]
    fn lorentzian_scan_has_no_inhomogeneous_width() {
        let (x, y) = noisy_scan(1.5, 0.0, 0.0, 1);
        let r = fit_scan(&x, &y, &ScanOptions::default()).unwrap();
        let i = r.fit.params["gamma_inhom"];
        assert!(
            i.value < 1e-3 || i.value < 3.0 * i.sigma.unwrap_or(0.0),
            "{i:?}"
        );
        assert!((r.voigt.gamma_hom - 1.5).abs() < 1e-3);
    }

    #[test]
    fn narrow_scan_rejected() {
        let x: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let p = VoigtParams::widths(2.0, 0.0);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| voigt_eval(v, &p).unwrap() * 100.0)
            .collect();
        assert!(matches!(
            fit_scan(&x, &y, &ScanOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mi_fig1b_widths() {
        let delays: Vec<f64> = (0..60).map(|i| i as f64 * 5.0).collect();
        let vis: Vec<f64> = delays
            .iter()
            .map(|&t| 0.95 * g1_voigt_unchecked(t, 0.30, 11.97))
            .collect();
        let r = fit_mi(&delays, &vis, &MiOptions::default()).unwrap();
        assert!((r.fit.derived["fwhm"].value - 12.13).abs() < 0.01);
        assert!((r.voigt.gamma_hom - 0.30).abs() < 1e-4);
    }

    #[test]
    fn mi_exponential_is_lorentzian() {
        let t2 = 0.3;
        let delays: Vec<f64> = (0..80).map(|i| i as f64 * 10.0).collect();
        let vis: Vec<f64> = delays.iter().map(|&t| (-t * 1e-3 / t2).exp()).collect();
        let r = fit_mi(&delays, &vis, &MiOptions::default()).unwrap();
        let gh = 1.0 / (std::f64::consts::PI * t2);
        assert!((r.voigt.gamma_hom - gh).abs() / gh < 1e-5);
        assert!(r.voigt.gamma_inhom < 1e-3);
        assert!((r.fit.derived["t2"].value - t2).abs() / t2 < 1e-4);
    }

    #[test]
    fn mi_requires_decay() {
        let delays = [0.0, 10.0, 20.0, 30.0, 40.0];
        let vis = [1.0, 0.9, 0.8, 0.7, 0.6];
        assert!(matches!(
            fit_mi(&delays, &vis, &MiOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
