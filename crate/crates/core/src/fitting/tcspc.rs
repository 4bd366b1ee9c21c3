//! Rise plus double-exponential photoluminescence decay.

use crate::error::{Error, Result};
use crate::fitting::lm::{nlls_fit, FitData, LmConfig, Model, ParamSpec};
use crate::lineshape::fourier_limit;
use crate::types::{CoherenceSummary, Estimate, FitResult};

pub const TCSPC_PARAM_NAMES: [&str; 7] =
    ["t0", "tau_rise", "a1", "tau1", "a2", "tau2", "background"];

/// Times in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcspcFitParams {
    pub t0: f64,
    pub tau_rise: f64,
    pub a1: f64,
    pub tau1: f64,
    pub a2: f64,
    pub tau2: f64,
    pub background: f64,
}

impl TcspcFitParams {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.t0,
            self.tau_rise,
            self.a1,
            self.tau1,
            self.a2,
            self.tau2,
            self.background,
        ]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            t0: p[0],
            tau_rise: p[1],
            a1: p[2],
            tau1: p[3],
            a2: p[4],
            tau2: p[5],
            background: p[6],
        }
    }
}

/// Where the rise factor applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RiseMode {
    /// `[1 − e^{−t/τr}]·(a₁e^{−t/τ₁} + a₂e^{−t/τ₂})`
    #[default]
    Both,
    /// `[1 − e^{−t/τr}]·a₁e^{−t/τ₁} + a₂e^{−t/τ₂}`
    FastOnly,
}

pub fn tcspc_model(t_ns: f64, p: &TcspcFitParams, rise: RiseMode) -> f64 {
    let s = t_ns - p.t0;
    if s < 0.0 {
        return p.background;
    }
    let r = 1.0 - (-s / p.tau_rise).exp();
    let fast = p.a1 * (-s / p.tau1).exp();
    let slow = if p.a2 != 0.0 {
        p.a2 * (-s / p.tau2).exp()
    } else {
        0.0
    };
    p.background
        + match rise {
            RiseMode::Both => r * (fast + slow),
            RiseMode::FastOnly => r * fast + slow,
        }
}

struct TcspcModel(RiseMode);

impl Model for TcspcModel {
    fn predict(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let p = TcspcFitParams::from_slice(params);
        for (o, &t) in out.iter_mut().zip(x) {
            *o = tcspc_model(t, &p, self.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TcspcOptions {
    pub rise: RiseMode,
    pub init: Option<TcspcFitParams>,
    pub lm: LmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcspcFit {
    pub fit: FitResult,
    pub params: TcspcFitParams,
    pub mono_exponential: bool,
    pub summary: CoherenceSummary,
}

fn slope_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| (sxy / sxx, my - sxy / sxx * mx))
}

/// Background from the pre-pulse floor, onset at 10 % of the peak, fast
/// constant from the 1/e fall, slow constant from the log-slope of the
/// last portion of the tail.
pub fn estimate_tcspc_init(x: &[f64], y: &[f64]) -> TcspcFitParams {
    let n = x.len();
    let k_peak = (0..n).max_by(|&i, &j| y[i].total_cmp(&y[j])).unwrap_or(0);
    let pre = &y[..k_peak.max(1)];
    let mut sorted = pre.to_vec();
    sorted.sort_by(f64::total_cmp);
    let background = sorted[sorted.len() / 2].max(0.0);
    let peak = y[k_peak] - background;
    let k_on = (0..=k_peak)
        .find(|&i| y[i] - background >= 0.1 * peak)
        .unwrap_or(k_peak);
    let t0 = x[k_on.saturating_sub(1)];
    let tau_rise = ((x[k_peak] - t0) / 3.0).max(1e-3);

    let k_e = (k_peak..n)
        .find(|&i| y[i] - background <= peak / std::f64::consts::E)
        .unwrap_or(n - 1);
    let tau1 = (x[k_e] - x[k_peak]).max(1e-2);

    let tail: Vec<(f64, f64)> = (k_peak..n)
        .filter(|&i| x[i] - x[k_peak] > 4.0 * tau1)
        .filter_map(|i| {
            let v = y[i] - background;
            (v > 0.0).then(|| (x[i] - t0, v.ln()))
        })
        .collect();
    let (a2, tau2) = match slope_fit(&tail) {
        Some((s, icpt)) if s < 0.0 && -1.0 / s > 1.5 * tau1 => {
            (icpt.exp().min(0.5 * peak), -1.0 / s)
        }
        _ => (0.05 * peak, 5.0 * tau1),
    };
    TcspcFitParams {
        t0,
        tau_rise,
        a1: (peak - a2).max(0.1 * peak),
        tau1,
        a2,
        tau2,
        background: background.max(1e-3 * peak),
    }
}

fn specs_for(p: &TcspcFitParams, x_span: f64, mono: bool) -> Vec<ParamSpec> {
    let step = x_span * 1e-3;
    vec![
        ParamSpec::new("t0", p.t0).scale(step.max(1e-3)),
        ParamSpec::new("tau_rise", p.tau_rise)
            .lower(0.0)
            .scale(0.01),
        ParamSpec::new("a1", p.a1).lower(0.0),
        ParamSpec::new("tau1", p.tau1).lower(0.0),
        ParamSpec::new("a2", if mono { 0.0 } else { p.a2 })
            .lower(0.0)
            .fixed(mono),
        ParamSpec::new("tau2", p.tau2).lower(0.0).fixed(mono),
        ParamSpec::new("background", p.background)
            .lower(0.0)
            .scale(1.0),
    ]
}

/// Fits a decay histogram (t in ns, counts). Falls back to a single
/// exponential when the slow component is not identifiable.
pub fn fit_tcspc(x: &[f64], y: &[f64], opts: &TcspcOptions) -> Result<TcspcFit> {
    let data = FitData::poisson(x.to_vec(), y.to_vec())?;
    if data.len() < 10 {
        return Err(Error::Precondition(
            "decay curve needs at least 10 points".into(),
        ));
    }
    let init = opts.init.unwrap_or_else(|| estimate_tcspc_init(x, y));
    let span = x[x.len() - 1] - x[0];
    let model = TcspcModel(opts.rise);

    let two = nlls_fit(
        &model,
        &data,
        &specs_for(&init, span, false),
        &opts.lm,
        "tcspc",
    );
    let needs_fallback = match &two {
        Err(Error::DegenerateFit(_)) => true,
        Err(_) => false,
        Ok(f) => {
            // the slow component is unidentifiable if either its amplitude
            // or its time constant is undetermined to within 100 %
            let rel = |e: Estimate| e.sigma.map(|s| s / e.value.abs()).unwrap_or(f64::INFINITY);
            !(rel(f.params["a2"]) <= 1.0 && rel(f.params["tau2"]) <= 1.0)
        }
    };
    let (mut fit, mono) = if needs_fallback {
        let mut f = nlls_fit(
            &model,
            &data,
            &specs_for(&init, span, true),
            &opts.lm,
            "tcspc",
        )?;
        f.flags.push("mono-exponential fallback".into());
        (f, true)
    } else {
        (two?, false)
    };
    let mut params = TcspcFitParams::from_slice(&fit.values());
    if !mono && params.tau1 > params.tau2 {
        // relabel so that tau1 is the fast constant
        let swapped = TcspcFitParams {
            a1: params.a2,
            tau1: params.tau2,
            a2: params.a1,
            tau2: params.tau1,
            ..params
        };
        fit = nlls_fit(
            &model,
            &data,
            &specs_for(&swapped, span, false),
            &opts.lm,
            "tcspc",
        )?;
        params = TcspcFitParams::from_slice(&fit.values());
    }
    if opts.rise == RiseMode::FastOnly {
        fit.flags.push("rise on fast component only".into());
    }
    let slow = if mono { params.tau1 } else { params.tau2 };
    if x[x.len() - 1] - params.t0 < 5.0 * slow {
        fit.flags
            .push("curve shorter than 5 slow decay constants".into());
    }

    let tau1 = fit.params["tau1"];
    let (t2_ft, gamma_ft) = fourier_limit(tau1.value)?;
    let s = tau1.sigma_or_zero();
    fit.derived.insert("t1".into(), tau1);
    fit.derived.insert(
        "t2_ft".into(),
        Estimate {
            value: t2_ft,
            sigma: tau1.sigma.map(|_| 2.0 * s),
        },
    );
    fit.derived.insert(
        "gamma_ft".into(),
        Estimate {
            value: gamma_ft,
            sigma: tau1.sigma.map(|_| gamma_ft * s / tau1.value),
        },
    );
    let summary = CoherenceSummary::from_lifetime(tau1.value)?;
    Ok(TcspcFit {
        fit,
        params,
        mono_exponential: mono,
        summary,
    })
}
