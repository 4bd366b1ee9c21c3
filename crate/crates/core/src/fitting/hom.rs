//! Two-photon interference in an unbalanced interferometer under cw drive.
//!
//! Cross-polarized: g²_⊥(τ) = ¼[g(τ−ΔT) + g(τ+ΔT) + 2g(τ)] with g the
//! bunching/antibunching model. Co-polarized:
//! g²_∥(τ) = g²_⊥(τ)·[1 − v·e^{−|τ−τ₀|/t_dip}].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correlator::{convolve_irf, convolve_on_grid};
use crate::error::{Error, Result};
use crate::fitting::hbt::{estimate_hbt_init, hbt_model, hbt_specs, histogram_data, HbtFitParams};
use crate::fitting::lm::{nlls_fit, propagate, LmConfig, Model, ParamSpec};
use crate::types::{Estimate, FitResult, Histogram};

/// Interferometer delay used when none is given, ns.
pub const DEFAULT_DELTA_T_NS: f64 = 14.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomPolarization {
    Co,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomFitParams {
    pub base: HbtFitParams,
    /// ns
    pub delta_t: f64,
    pub v: f64,
    /// ns
    pub t_dip: f64,
}

impl HomFitParams {
    fn to_vec(self) -> Vec<f64> {
        let mut v = self.base.to_vec();
        v.extend([self.delta_t, self.v, self.t_dip]);
        v
    }

    fn from_slice(p: &[f64]) -> Self {
        Self {
            base: HbtFitParams::from_slice(&p[..10]),
            delta_t: p[10],
            v: p[11],
            t_dip: p[12],
        }
    }
}

pub fn hom_model(tau_ps: f64, p: &HomFitParams, pol: HomPolarization) -> f64 {
    let dt = p.delta_t * 1e3;
    let g = |t: f64| hbt_model(t, &p.base);
    let perp = 0.25 * (g(tau_ps - dt) + g(tau_ps + dt) + 2.0 * g(tau_ps));
    match pol {
        HomPolarization::Cross => perp,
        HomPolarization::Co => {
            let d = (tau_ps - p.base.tau0).abs() * 1e-3;
            perp * (1.0 - p.v * (-d / p.t_dip).exp())
        }
    }
}

struct HomModel {
    irf_fwhm_ps: f64,
    pol: HomPolarization,
    tie_dip: bool,
}

impl HomModel {
    fn params(&self, v: &[f64]) -> HomFitParams {
        let mut p = HomFitParams::from_slice(v);
        if self.tie_dip {
            p.t_dip = p.base.t_b;
        }
        p
    }
}

impl Model for HomModel {
    fn predict(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let p = self.params(params);
        let y = convolve_on_grid(|t| hom_model(t, &p, self.pol), x, self.irf_fwhm_ps);
        out.copy_from_slice(&y);
    }
}

/// V = 1 − g∥(0)/g⊥(0) with first-order (quotient rule) errors.
pub fn hom_visibility(g_par: Estimate, g_perp: Estimate) -> Result<Estimate> {
    let sp = g_perp.sigma_or_zero();
    if !(g_perp.value > 0.0) || g_perp.value <= 2.0 * sp {
        return Err(Error::VisibilityUndefined(format!(
            "g⊥(0) = {} ± {} is consistent with zero",
            g_perp.value, sp
        )));
    }
    let r = g_par.value / g_perp.value;
    let value = 1.0 - r;
    let var = (g_par.sigma_or_zero() / g_perp.value).powi(2) + (r * sp / g_perp.value).powi(2);
    Ok(match (g_par.sigma, g_perp.sigma) {
        (None, None) => Estimate::exact(value),
        _ => Estimate::new(value, var.sqrt()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomOptions {
    pub irf_fwhm_ps: f64,
    pub delta_t_ns: f64,
    /// Use T_b of the base model as the dip timescale.
    pub tie_dip: bool,
    /// Let the bunching terms float in the fits. They are zeroed for the
    /// visibility evaluation either way.
    pub free_bunching: bool,
    pub lm: LmConfig,
}

impl HomOptions {
    pub fn new(irf_fwhm_ps: f64) -> Self {
        Self {
            irf_fwhm_ps,
            delta_t_ns: DEFAULT_DELTA_T_NS,
            tie_dip: false,
            free_bunching: false,
            lm: LmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomFit {
    pub cross: FitResult,
    pub co: FitResult,
    pub g_perp_raw: Estimate,
    pub g_perp_decon: Estimate,
    pub g_par_raw: Estimate,
    pub g_par_decon: Estimate,
    pub v_raw: Estimate,
    pub v_decon: Estimate,
    /// 2·t_dip, ns.
    pub dip_full_width: Estimate,
}

fn zero_delay(fit: &FitResult, specs: &[ParamSpec], model: &HomModel) -> (Estimate, Estimate) {
    let eval = |p: &[f64], irf: f64| {
        let mut q = model.params(p);
        q.base = q.base.without_bunching();
        let pol = model.pol;
        convolve_irf(move |t| hom_model(t, &q, pol), irf)(q.base.tau0)
    };
    let raw = propagate(fit, specs, |p| eval(p, model.irf_fwhm_ps));
    let decon = propagate(fit, specs, |p| eval(p, 0.0));
    (raw, decon)
}

fn same_grid(a: &Histogram, b: &Histogram) -> bool {
    a.bin_width_ps == b.bin_width_ps && a.tau_min_ps == b.tau_min_ps && a.n_bins() == b.n_bins()
}

/// Fits the cross-polarized histogram, then the co-polarized one with the
/// base parameters held at the cross result (only the level, `v` and
/// `t_dip` float), and forms raw and deconvolved visibilities.
pub fn fit_hom(co: &Histogram, cross: &Histogram, opts: &HomOptions) -> Result<HomFit> {
    if !same_grid(co, cross) {
        return Err(Error::Precondition(
            "co and cross histograms must share one delay grid".into(),
        ));
    }
    if !(opts.delta_t_ns > 0.0) {
        return Err(Error::Domain(
            "interferometer delay must be positive".into(),
        ));
    }
    let bin = cross.bin_width_ps as f64;
    let cross_data = histogram_data(cross)?;
    let co_data = histogram_data(co)?;

    let mut base = estimate_hbt_init(&cross_data);
    // the central cross dip only reaches down to 1 − b/2
    base.b = (2.0 * base.b).min(0.99);
    let init = HomFitParams {
        base,
        delta_t: opts.delta_t_ns,
        v: 0.0,
        t_dip: base.t_b,
    };

    let mut cross_specs = hbt_specs(&base, bin, !opts.free_bunching);
    cross_specs.push(ParamSpec::new("delta_t", opts.delta_t_ns).fixed(true));
    cross_specs.push(ParamSpec::new("v", 0.0).fixed(true));
    cross_specs.push(ParamSpec::new("t_dip", init.t_dip).fixed(true));
    let cross_model = HomModel {
        irf_fwhm_ps: opts.irf_fwhm_ps,
        pol: HomPolarization::Cross,
        tie_dip: false,
    };
    let mut cross_fit = nlls_fit(
        &cross_model,
        &cross_data,
        &cross_specs,
        &opts.lm,
        "hom-cross",
    )?;
    let cross_p = HomFitParams::from_slice(&cross_fit.values());

    // co: base from the cross fit
    let (perp_raw, perp_decon) = zero_delay(&cross_fit, &cross_specs, &cross_model);
    let co_min = {
        let d = ((100.0 / bin) as usize).max(1);
        let k0 = co_data
            .x
            .iter()
            .position(|&t| t >= cross_p.base.tau0)
            .unwrap_or(0);
        let lo = k0.saturating_sub(d);
        let hi = (k0 + d + 1).min(co_data.y.len());
        co_data.y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
    };
    let v0 = (1.0 - co_min / perp_raw.value.max(1e-9)).clamp(0.05, 0.95);
    let mut co_specs: Vec<ParamSpec> = cross_specs
        .iter()
        .zip(cross_p.to_vec())
        .map(|(s, v)| ParamSpec {
            init: v,
            fixed: true,
            ..s.clone()
        })
        .collect();
    co_specs[0].fixed = false;
    co_specs[11] = ParamSpec::new("v", v0).bounds(0.0, 1.0).scale(0.1);
    co_specs[12] = ParamSpec::new("t_dip", cross_p.base.t_b.max(1e-3))
        .lower(0.0)
        .scale(0.1)
        .fixed(opts.tie_dip);
    let co_model = HomModel {
        irf_fwhm_ps: opts.irf_fwhm_ps,
        pol: HomPolarization::Co,
        tie_dip: opts.tie_dip,
    };
    let mut co_fit = nlls_fit(&co_model, &co_data, &co_specs, &opts.lm, "hom-co")?;
    let (par_raw, par_decon) = zero_delay(&co_fit, &co_specs, &co_model);

    let v_raw = hom_visibility(par_raw, perp_raw)?;
    let v_decon = hom_visibility(par_decon, perp_decon)?;
    let dip_full_width = if opts.tie_dip {
        let e = cross_fit.params["t_b"];
        Estimate {
            value: 2.0 * e.value,
            sigma: e.sigma.map(|s| 2.0 * s),
        }
    } else {
        let e = co_fit.params["t_dip"];
        Estimate {
            value: 2.0 * e.value,
            sigma: e.sigma.map(|s| 2.0 * s),
        }
    };

    cross_fit.derived.insert("g2_raw".into(), perp_raw);
    cross_fit.derived.insert("g2_decon".into(), perp_decon);
    co_fit.derived.insert("g2_raw".into(), par_raw);
    co_fit.derived.insert("g2_decon".into(), par_decon);

    Ok(HomFit {
        cross: cross_fit,
        co: co_fit,
        g_perp_raw: perp_raw,
        g_perp_decon: perp_decon,
        g_par_raw: par_raw,
        g_par_decon: par_decon,
        v_raw,
        v_decon,
        dip_full_width,
    })
}

impl HomFit {
    /// Both fits in one result: parameters prefixed `cross_` / `co_`,
    /// block-diagonal covariance, visibilities among the derived values.
    pub fn combined(&self) -> FitResult {
        let mut params = BTreeMap::new();
        let mut names = Vec::new();
        let n1 = self.cross.param_names.len();
        let n = n1 + self.co.param_names.len();
        let mut cov = vec![vec![0.0; n]; n];
        for (off, prefix, f) in [(0, "cross_", &self.cross), (n1, "co_", &self.co)] {
            for (i, name) in f.param_names.iter().enumerate() {
                let key = format!("{prefix}{name}");
                params.insert(key.clone(), f.params[name]);
                names.push(key);
                for j in 0..f.param_names.len() {
                    cov[off + i][off + j] = f.covariance[i][j];
                }
            }
        }
        let mut derived = BTreeMap::new();
        derived.insert("g2_perp_raw".into(), self.g_perp_raw);
        derived.insert("g2_perp_decon".into(), self.g_perp_decon);
        derived.insert("g2_par_raw".into(), self.g_par_raw);
        derived.insert("g2_par_decon".into(), self.g_par_decon);
        derived.insert("v_raw".into(), self.v_raw);
        derived.insert("v_decon".into(), self.v_decon);
        derived.insert("dip_full_width".into(), self.dip_full_width);
        let mut flags: Vec<String> = self
            .cross
            .flags
            .iter()
            .map(|f| format!("cross: {f}"))
            .collect();
        flags.extend(self.co.flags.iter().map(|f| format!("co: {f}")));
        FitResult {
            model: "hom".into(),
            params,
            param_names: names,
            covariance: cov,
            chi2_red: 0.5 * (self.cross.chi2_red + self.co.chi2_red),
            converged: self.cross.converged && self.co.converged,
            iterations: self.cross.iterations + self.co.iterations,
            gradient_norm: self.cross.gradient_norm.max(self.co.gradient_norm),
            derived,
            flags,
            provenance: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::HistogramMeta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn base() -> HbtFitParams {
        HbtFitParams {
            a: 1.0,
            b: 1.0,
            tau0: 0.0,
            t_b: 0.6,
            c: [0.0; 3],
            t_c: [6.6, 24.0, 117.0],
        }
    }

    fn hom(v: f64) -> HomFitParams {
        HomFitParams {
            base: base(),
            delta_t: 14.3,
            v,
            t_dip: 0.6,
        }
    }

    #[test]
    fn cross_floor_is_half() {
        let p = hom(0.0);
        assert!((hom_model(0.0, &p, HomPolarization::Cross) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn co_without_interference_equals_cross() {
        let p = hom(0.0);
        for t in [-20_000.0, -300.0, 0.0, 55.0, 14_300.0] {
            assert_eq!(
                hom_model(t, &p, HomPolarization::Co),
                hom_model(t, &p, HomPolarization::Cross)
            );
        }
    }

    #[test]
    fn perfect_interference_zero() {
        assert_eq!(hom_model(0.0, &hom(1.0), HomPolarization::Co), 0.0);
    }

    #[test]
    fn visibility_arithmetic() {
        let v = hom_visibility(Estimate::exact(0.049), Estimate::exact(0.463)).unwrap();
        assert_eq!(format!("{:.3}", v.value), "0.894");
        let v = hom_visibility(Estimate::exact(0.135), Estimate::exact(0.471)).unwrap();
        assert_eq!(format!("{:.3}", v.value), "0.713");
        let v = hom_visibility(Estimate::exact(0.3), Estimate::exact(0.3)).unwrap();
        assert_eq!(v.value, 0.0);
        let v = hom_visibility(Estimate::exact(0.0), Estimate::exact(0.7)).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn visibility_undefined_for_vanishing_denominator() {
        assert!(matches!(
            hom_visibility(Estimate::exact(0.1), Estimate::new(0.01, 0.02)),
            Err(Error::VisibilityUndefined(_))
        ));
        assert!(hom_visibility(Estimate::exact(0.1), Estimate::exact(0.0)).is_err());
    }

    #[test]
    fn visibility_decreasing_in_parallel_value() {
        let perp = Estimate::exact(0.5);
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let v = hom_visibility(Estimate::exact(k as f64 * 0.03), perp)
                .unwrap()
                .value;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn quotient_rule_sigma() {
        let v = hom_visibility(Estimate::new(0.1, 0.01), Estimate::new(0.5, 0.02)).unwrap();
        let expected = ((0.01 / 0.5f64).powi(2) + (0.1 * 0.02 / 0.25f64).powi(2)).sqrt();
        assert!((v.sigma.unwrap() - expected).abs() < 1e-15);
    }

    fn synthetic(p: &HomFitParams, pol: HomPolarization, level: f64, seed: u64) -> Histogram {
        let bin = 50;
        let win = 100_000u64;
        let n = (2 * win / bin + 1) as usize;
        let mut h = Histogram::zeros(bin, -(win as i64), n, HistogramMeta::default());
        let x = h.centers_ps();
        let y = convolve_on_grid(|t| hom_model(t, p, pol), &x, 93.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (c, v) in h.counts.iter_mut().zip(&y) {
            *c = if *v > 0.0 {
                Poisson::new(level * v).unwrap().sample(&mut rng) as u64
            } else {
                0
            };
        }
        h.norm = level;
        h
    }

    #[test]
    fn recovers_visibility() {
        let p = hom(0.9);
        let co = synthetic(&p, HomPolarization::Co, 5000.0, 1);
        let cross = synthetic(&p, HomPolarization::Cross, 5000.0, 2);
        let r = fit_hom(&co, &cross, &HomOptions::new(93.0)).unwrap();
        assert!((r.v_decon.value - 0.9).abs() < 0.03, "{:?}", r.v_decon);
        assert!(r.v_raw.value < r.v_decon.value);
        assert!((r.g_perp_decon.value - 0.5).abs() < 0.02);
        assert!((r.dip_full_width.value - 1.2).abs() < 0.15);
        let c = r.combined();
        assert!(c.derived.contains_key("v_decon"));
    }
}
