//! Three-timescale bunching plus antibunching model for g²(τ).

use crate::correlator::{convolve_irf, convolve_on_grid};
use crate::error::{Error, Result};
use crate::fitting::lm::{nlls_fit, propagate, FitData, LmConfig, Model, ParamSpec};
use crate::types::{Estimate, FitResult, Histogram};
use nalgebra::{Matrix3, Vector3};

pub const N_BUNCHING: usize = 3;

pub const HBT_PARAM_NAMES: [&str; 10] = [
    "a", "b", "tau0", "t_b", "c1", "c2", "c3", "t_c1", "t_c2", "t_c3",
];

/// Delays `tau0` in ps, timescales in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbtFitParams {
    pub a: f64,
    pub b: f64,
    pub tau0: f64,
    pub t_b: f64,
    pub c: [f64; N_BUNCHING],
    pub t_c: [f64; N_BUNCHING],
}

impl HbtFitParams {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.a, self.b, self.tau0, self.t_b];
        v.extend_from_slice(&self.c);
        v.extend_from_slice(&self.t_c);
        v
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            a: p[0],
            b: p[1],
            tau0: p[2],
            t_b: p[3],
            c: [p[4], p[5], p[6]],
            t_c: [p[7], p[8], p[9]],
        }
    }

    /// Orders the bunching terms by timescale, ties by amplitude.
    pub fn canonical(&self) -> Self {
        let mut pairs: Vec<(f64, f64)> = self.t_c.iter().copied().zip(self.c).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut out = *self;
        for (k, (t, c)) in pairs.into_iter().enumerate() {
            out.t_c[k] = t;
            out.c[k] = c;
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.t_c.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn without_bunching(&self) -> Self {
        Self {
            c: [0.0; N_BUNCHING],
            ..*self
        }
    }

    pub fn from_fit(fit: &FitResult) -> Result<Self> {
        let mut p = Vec::with_capacity(HBT_PARAM_NAMES.len());
        for n in HBT_PARAM_NAMES {
            p.push(
                fit.value(n)
                    .ok_or_else(|| Error::Precondition(format!("fit has no parameter `{n}`")))?,
            );
        }
        Ok(Self::from_slice(&p))
    }
}

/// g²(τ) = a·(1 − b·e^{−|τ−τ₀|/T_b})·∏ᵢ(1 + cᵢ·e^{−|τ−τ₀|/T_c,i}), τ in ps.
pub fn hbt_model(tau_ps: f64, p: &HbtFitParams) -> f64 {
    let d = (tau_ps - p.tau0).abs() * 1e-3;
    let mut g = p.a * (1.0 - p.b * (-d / p.t_b).exp());
    for i in 0..N_BUNCHING {
        if p.c[i] != 0.0 {
            g *= 1.0 + p.c[i] * (-d / p.t_c[i]).exp();
        }
    }
    g
}

pub(crate) struct HbtModel {
    pub irf_fwhm_ps: f64,
}

impl Model for HbtModel {
    fn predict(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let p = HbtFitParams::from_slice(params);
        let y = convolve_on_grid(|t| hbt_model(t, &p), x, self.irf_fwhm_ps);
        out.copy_from_slice(&y);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbtOptions {
    pub irf_fwhm_ps: f64,
    /// Starting point; estimated from the data when absent.
    pub init: Option<HbtFitParams>,
    /// Hold all cᵢ at zero.
    pub no_bunching: bool,
    pub lm: LmConfig,
}

impl HbtOptions {
    pub fn new(irf_fwhm_ps: f64) -> Self {
        Self {
            irf_fwhm_ps,
            init: None,
            no_bunching: false,
            lm: LmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbtFit {
    pub fit: FitResult,
    pub params: HbtFitParams,
    /// IRF-convolved model at τ₀.
    pub g2_raw: Estimate,
    /// Bare model at τ₀.
    pub g2_decon: Estimate,
}

/// x (bin centres, ps), y (g²) and weights (1/var of g²) of a normalized
/// histogram.
pub(crate) fn histogram_data(hist: &Histogram) -> Result<FitData> {
    if !(hist.norm > 0.0 && hist.norm.is_finite()) {
        return Err(Error::Precondition(
            "histogram normalization must be positive".into(),
        ));
    }
    let norm2 = hist.norm * hist.norm;
    let w = hist
        .counts
        .iter()
        .map(|&c| norm2 / (c as f64).max(1.0))
        .collect();
    FitData::new(hist.centers_ps(), hist.g2(), w)
}

fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = vec![0.0; y.len() + 1];
    for (i, v) in y.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Mean of `y` over points with `lo ≤ |x - x0| ≤ hi`.
fn band_mean(x: &[f64], y: &[f64], x0: f64, lo: f64, hi: f64) -> Option<f64> {
    let (s, n) = x
        .iter()
        .zip(y)
        .filter(|(xi, _)| {
            let d = (*xi - x0).abs();
            d >= lo && d <= hi
        })
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Data-driven starting point: τ₀ at the smoothed minimum, T_b from the
/// half-recovery delay, and the bunching terms from a timescale grid search.
pub fn estimate_hbt_init(data: &FitData) -> HbtFitParams {
    let x = &data.x;
    let dx = if x.len() > 1 {
        (x[1] - x[0]).abs().max(1.0)
    } else {
        1.0
    };
    let span = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smooth = moving_average(&data.y, ((100.0 / dx) as usize).max(1));

    let mut k_min = 0;
    let mut best = f64::INFINITY;
    for (k, (&xi, &yi)) in x.iter().zip(&smooth).enumerate() {
        if xi.abs() <= 5_000.0 && yi < best {
            best = yi;
            k_min = k;
        }
    }
    let tau0 = x[k_min];

    let a = band_mean(x, &data.y, tau0, 0.8 * span, span)
        .filter(|v| *v > 0.0)
        .unwrap_or(1.0);

    // shoulder just outside the dip
    let shoulder = band_mean(x, &smooth, tau0, 3_000.0, 5_000.0)
        .unwrap_or(a)
        .max(best);
    let b = (1.0 - best / shoulder).clamp(0.05, 0.99);
    let half_level = best + 0.5 * (shoulder - best);
    let t_half = x
        .iter()
        .zip(&smooth)
        .filter(|(xi, _)| **xi > tau0)
        .find(|(_, yi)| **yi >= half_level)
        .map(|(xi, _)| xi - tau0)
        .unwrap_or(500.0);
    let t_b = (t_half * 1e-3 / std::f64::consts::LN_2).clamp(0.05, 20.0);

    let span_ns = span * 1e-3;
    let (c, t_c) = bunching_grid(x, &data.y, tau0, a, b, t_b, span_ns).unwrap_or((
        [0.1; N_BUNCHING],
        [0.01 * span_ns, 0.05 * span_ns, 0.25 * span_ns],
    ));

    HbtFitParams {
        a,
        b,
        tau0,
        t_b,
        c,
        t_c,
    }
    .canonical()
}

/// Bunching start values from a grid search over timescale triples. The
/// excess `g²/(a·dip) − 1` is averaged into log-spaced lag bins and, for
/// each triple, the amplitudes follow from linear least squares; the triple
/// with the smallest residual and positive amplitudes wins.
fn bunching_grid(
    x: &[f64],
    y: &[f64],
    tau0: f64,
    a: f64,
    b: f64,
    t_b: f64,
    span_ns: f64,
) -> Option<([f64; N_BUNCHING], [f64; N_BUNCHING])> {
    let d_lo = (3.0 * t_b).max(0.5);
    if !(span_ns > 4.0 * d_lo) {
        return None;
    }
    const BINS: usize = 120;
    let ratio = (span_ns / d_lo).ln();
    let mut sum = [0.0; BINS];
    let mut n = [0usize; BINS];
    for (&xi, &yi) in x.iter().zip(y) {
        let d = (xi - tau0).abs() * 1e-3;
        if d < d_lo || d > span_ns {
            continue;
        }
        let dip = 1.0 - b * (-d / t_b).exp();
        let k = (((d / d_lo).ln() / ratio) * BINS as f64).min(BINS as f64 - 1.0) as usize;
        sum[k] += yi / (a * dip) - 1.0;
        n[k] += 1;
    }
    let pts: Vec<(f64, f64, f64)> = (0..BINS)
        .filter(|&k| n[k] > 0)
        .map(|k| {
            let d = d_lo * (ratio * (k as f64 + 0.5) / BINS as f64).exp();
            (d, sum[k] / n[k] as f64, n[k] as f64)
        })
        .collect();
    if pts.len() < 10 {
        return None;
    }

    const GRID: usize = 28;
    let grid: Vec<f64> = (0..GRID)
        .map(|i| d_lo * (ratio * (i as f64 + 0.5) / GRID as f64).exp())
        .collect();
    let basis: Vec<Vec<f64>> = grid
        .iter()
        .map(|t| pts.iter().map(|(d, _, _)| (-d / t).exp()).collect())
        .collect();
    let mut best: Option<(f64, [f64; 3], [f64; 3])> = None;
    for i in 0..GRID {
        for j in i + 2..GRID {
            for k in j + 2..GRID {
                let cols = [&basis[i], &basis[j], &basis[k]];
                let mut m = Matrix3::zeros();
                let mut r = Vector3::zeros();
                for (p, &(_, e, w)) in pts.iter().enumerate() {
                    for u in 0..3 {
                        r[u] += w * cols[u][p] * e;
                        for v in 0..3 {
                            m[(u, v)] += w * cols[u][p] * cols[v][p];
                        }
                    }
                }
                let Some(c) = m.try_inverse().map(|inv| inv * r) else {
                    continue;
                };
                if c.iter().any(|v| !(*v > 0.0)) {
                    continue;
                }
                let ssr: f64 = pts
                    .iter()
                    .enumerate()
                    .map(|(p, &(_, e, w))| {
                        let f: f64 = (0..3).map(|u| c[u] * cols[u][p]).sum();
                        w * (e - f).powi(2)
                    })
                    .sum();
                if best.as_ref().is_none_or(|bst| ssr < bst.0) {
                    best = Some((ssr, [c[0], c[1], c[2]], [grid[i], grid[j], grid[k]]));
                }
            }
        }
    }
    best.map(|(_, c, t)| (c, t))
}

pub(crate) fn hbt_specs(init: &HbtFitParams, bin_ps: f64, no_bunching: bool) -> Vec<ParamSpec> {
    let v = init.to_vec();
    let mut specs = vec![
        ParamSpec::new("a", v[0]).lower(0.0),
        ParamSpec::new("b", v[1].clamp(0.0, 1.0))
            .bounds(0.0, 1.0)
            .scale(0.1),
        ParamSpec::new("tau0", v[2]).scale(bin_ps.max(1.0)),
        ParamSpec::new("t_b", v[3]).lower(0.0).scale(0.1),
    ];
    for i in 0..N_BUNCHING {
        specs.push(
            ParamSpec::new(
                HBT_PARAM_NAMES[4 + i],
                if no_bunching { 0.0 } else { v[4 + i].max(0.0) },
            )
            .lower(0.0)
            .scale(0.01)
            .fixed(no_bunching),
        );
    }
    for i in 0..N_BUNCHING {
        specs.push(
            ParamSpec::new(HBT_PARAM_NAMES[7 + i], v[7 + i])
                .lower(0.0)
                .fixed(no_bunching),
        );
    }
    specs
}

/// Fits the IRF-convolved model to a normalized histogram and reports the
/// zero-delay values with and without the IRF.
pub fn fit_hbt(hist: &Histogram, opts: &HbtOptions) -> Result<HbtFit> {
    if opts.irf_fwhm_ps < 0.0 {
        return Err(Error::Domain("IRF FWHM must be ≥ 0".into()));
    }
    let data = histogram_data(hist)?;
    let init = opts
        .init
        .map(|p| p.canonical())
        .unwrap_or_else(|| estimate_hbt_init(&data));
    let model = HbtModel {
        irf_fwhm_ps: opts.irf_fwhm_ps,
    };
    let bin = hist.bin_width_ps as f64;
    let mut specs = hbt_specs(&init, bin, opts.no_bunching);
    let mut fit = nlls_fit(&model, &data, &specs, &opts.lm, "hbt")?;
    let mut params = HbtFitParams::from_fit(&fit)?;
    if !params.is_canonical() {
        // relabel and polish so the reported terms are in canonical order
        specs = hbt_specs(&params.canonical(), bin, opts.no_bunching);
        fit = nlls_fit(&model, &data, &specs, &opts.lm, "hbt")?;
        params = HbtFitParams::from_fit(&fit)?;
    }

    let irf = opts.irf_fwhm_ps;
    let g2_raw = propagate(&fit, &specs, |p| {
        let q = HbtFitParams::from_slice(p);
        convolve_irf(move |t| hbt_model(t, &q), irf)(q.tau0)
    });
    let g2_decon = propagate(&fit, &specs, |p| {
        let q = HbtFitParams::from_slice(p);
        hbt_model(q.tau0, &q)
    });
    fit.derived.insert("g2_raw".into(), g2_raw);
    fit.derived.insert("g2_decon".into(), g2_decon);
    fit.derived
        .insert("irf_fwhm_ps".into(), Estimate::exact(opts.irf_fwhm_ps));
    Ok(HbtFit {
        fit,
        params,
        g2_raw,
        g2_decon,
    })
}
