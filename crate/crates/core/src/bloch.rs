//! Pulsed two-level optical Bloch equations.
//!
//! Time runs in ps inside the integrator; rates are configured in 1/ns and
//! detunings in rad/s. The pulse envelope Ω(t) integrates to the pulse area
//! Θ. Besides radiative decay and pure dephasing the excited state can leak
//! through a loss channel whose rate follows the instantaneous drive
//! intensity, γ_loss·(Ω(t)·FWHM/π)², so stronger pulses lose more
//! population and the Rabi maxima are damped progressively. Leaking
//! population also takes its share (half the loss rate) of the coherence
//! with it; without that the density matrix would turn unphysical.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{nlls_fit, propagate, FitData, LmConfig, Model, ParamSpec};
use crate::types::{Estimate, FitResult};
use crate::units::FWHM_PER_SIGMA;

const POP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub population_e: f64,
    pub population_g: f64,
    pub coherence_re: f64,
    pub coherence_im: f64,
}

impl BlochState {
    pub fn ground() -> Self {
        Self {
            population_e: 0.0,
            population_g: 1.0,
            coherence_re: 0.0,
            coherence_im: 0.0,
        }
    }

    /// Length of the Bloch vector (u, v, w) of the two-level block.
    pub fn bloch_norm(&self) -> f64 {
        let w = self.population_e - self.population_g;
        (4.0 * (self.coherence_re.powi(2) + self.coherence_im.powi(2)) + w * w).sqrt()
    }

    fn axpy(&self, k: &[f64; 4], h: f64) -> Self {
        Self {
            population_e: self.population_e + h * k[0],
            population_g: self.population_g + h * k[1],
            coherence_re: self.coherence_re + h * k[2],
            coherence_im: self.coherence_im + h * k[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    #[default]
    Gaussian,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub envelope: Envelope,
    /// FWHM of Ω(t), ps.
    pub duration_fwhm: f64,
    /// Θ = ∫Ω dt, rad.
    pub area: f64,
    /// rad/s
    pub detuning: f64,
}

impl PulseConfig {
    pub fn gaussian(duration_fwhm: f64, area: f64) -> Self {
        Self {
            envelope: Envelope::Gaussian,
            duration_fwhm,
            area,
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_fwhm > 0.0) {
            return Err(Error::Domain("pulse FWHM must be positive".into()));
        }
        if !(self.area >= 0.0) || !self.detuning.is_finite() {
            return Err(Error::Domain(
                "pulse area must be ≥ 0 and detuning finite".into(),
            ));
        }
        Ok(())
    }

    /// Rabi frequency (rad/ps) at `t` ps from the pulse centre.
    pub fn omega(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian => {
                let s = self.duration_fwhm / FWHM_PER_SIGMA;
                self.area * (-0.5 * (t / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
            }
            Envelope::Square => {
                if t.abs() <= 0.5 * self.duration_fwhm {
                    self.area / self.duration_fwhm
                } else {
                    0.0
                }
            }
        }
    }
}

/// Rates in 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayConfig {
    pub gamma_rad: f64,
    pub gamma_deph: f64,
    pub gamma_loss: f64,
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.gamma_rad, self.gamma_deph, self.gamma_loss]
            .iter()
            .any(|r| !(*r >= 0.0) || !r.is_finite())
        {
            return Err(Error::Domain("decay rates must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

struct Rhs {
    delta: f64,
    g1: f64,
    g2: f64,
    loss: f64,
    loss_scale: f64,
}

impl Rhs {
    fn new(pulse: &PulseConfig, decay: &DecayConfig) -> Self {
        Self {
            delta: pulse.detuning * 1e-12,
            g1: decay.gamma_rad * 1e-3,
            g2: (0.5 * decay.gamma_rad + decay.gamma_deph) * 1e-3,
            loss: decay.gamma_loss * 1e-3,
            loss_scale: pulse.duration_fwhm / PI,
        }
    }

    fn eval(&self, s: &BlochState, omega: f64) -> [f64; 4] {
        let gl = self.loss * (omega * self.loss_scale).powi(2);
        let (re, im) = (s.coherence_re, s.coherence_im);
        let inv = s.population_g - s.population_e;
        [
            -omega * im - (self.g1 + gl) * s.population_e,
            omega * im + self.g1 * s.population_e,
            // d/dt ρeg = iΔρeg − i(Ω/2)(ρgg − ρee) − γ₂ρeg
            -self.delta * im - (self.g2 + 0.5 * gl) * re,
            self.delta * re - 0.5 * omega * inv - (self.g2 + 0.5 * gl) * im,
        ]
    }
}

fn step_count(pulse: &PulseConfig, dt: f64) -> usize {
    let n = (8.0 * pulse.duration_fwhm / dt).ceil() as usize;
    // a multiple of 16 puts the square-pulse edges on step boundaries
    n.div_ceil(16) * 16
}

/// Runs the integrator over ±4 FWHM and calls `visit` after every step.
fn integrate(
    s0: BlochState,
    pulse: &PulseConfig,
    decay: &DecayConfig,
    dt: f64,
    mut visit: impl FnMut(f64, &BlochState),
) -> Result<BlochState> {
    pulse.validate()?;
    decay.validate()?;
    if !(dt > 0.0) || dt > pulse.duration_fwhm / 50.0 {
        return Err(Error::Precondition(format!(
            "step {dt} ps must be positive and ≤ FWHM/50 = {} ps",
            pulse.duration_fwhm / 50.0
        )));
    }
    let rhs = Rhs::new(pulse, decay);
    let n = step_count(pulse, dt);
    let t_start = -4.0 * pulse.duration_fwhm;
    let h = 8.0 * pulse.duration_fwhm / n as f64;
    let mut s = s0;
    visit(t_start, &s);
    for k in 0..n {
        let t = t_start + k as f64 * h;
        let (wa, wm, wb) = match pulse.envelope {
            Envelope::Gaussian => (pulse.omega(t), pulse.omega(t + 0.5 * h), pulse.omega(t + h)),
            Envelope::Square => {
                let w = pulse.omega(t + 0.5 * h);
                (w, w, w)
            }
        };
        let k1 = rhs.eval(&s, wa);
        let k2 = rhs.eval(&s.axpy(&k1, 0.5 * h), wm);
        let k3 = rhs.eval(&s.axpy(&k2, 0.5 * h), wm);
        let k4 = rhs.eval(&s.axpy(&k3, h), wb);
        let mut inc = [0.0; 4];
        for i in 0..4 {
            inc[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        s = s.axpy(&inc, h);
        for p in [s.population_e, s.population_g] {
            if !(-POP_TOLERANCE..=1.0 + POP_TOLERANCE).contains(&p) {
                return Err(Error::Integrator(format!(
                    "population {p} left [0, 1] at t = {:.3} ps; reduce the step",
                    t + h
                )));
            }
        }
        visit(t + h, &s);
    }
    Ok(s)
}

/// Trajectory `(t_ps, state)` from −4 to +4 pulse FWHM around the pulse
/// centre with a fixed RK4 step no larger than `dt` ps.
pub fn evolve(
    s0: BlochState,
    pulse: &PulseConfig,
    decay: &DecayConfig,
    dt: f64,
) -> Result<Vec<(f64, BlochState)>> {
    let mut out = Vec::with_capacity(step_count(pulse, dt.max(1e-12)) + 1);
    integrate(s0, pulse, decay, dt, |t, s| out.push((t, *s)))?;
    Ok(out)
}

/// State after the pulse, without storing the trajectory.
pub fn final_state(
    s0: BlochState,
    pulse: &PulseConfig,
    decay: &DecayConfig,
    dt: f64,
) -> Result<BlochState> {
    integrate(s0, pulse, decay, dt, |_, _| {})
}

/// Pulse shape shared by every point of an area sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub envelope: Envelope,
    pub duration_fwhm: f64,
    pub detuning: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self {
            envelope: Envelope::Gaussian,
            duration_fwhm: 10.0,
            detuning: 0.0,
        }
    }
}

impl PulseShape {
    pub fn with_area(&self, area: f64) -> PulseConfig {
        PulseConfig {
            envelope: self.envelope,
            duration_fwhm: self.duration_fwhm,
            area,
            detuning: self.detuning,
        }
    }

    pub fn default_step(&self) -> f64 {
        self.duration_fwhm / 100.0
    }
}

/// Final excited population for each pulse area, starting from the ground
/// state. Points run in parallel; the output follows the input order.
pub fn rabi_curve(areas: &[f64], shape: &PulseShape, decay: &DecayConfig) -> Result<Vec<f64>> {
    if areas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("areas must be sorted ascending".into()));
    }
    let dt = shape.default_step();
    areas
        .par_iter()
        .map(|&a| {
            final_state(BlochState::ground(), &shape.with_area(a), decay, dt)
                .map(|s| s.population_e)
        })
        .collect()
}

/// Value of the first interior local maximum of a sampled curve.
pub fn prep_fidelity(populations: &[f64]) -> Result<f64> {
    for k in 1..populations.len().saturating_sub(1) {
        if populations[k] > populations[k - 1] && populations[k] >= populations[k + 1] {
            return Ok(populations[k]);
        }
    }
    Err(Error::NoMaximum)
}

/// First maximum of the population against pulse area, located on a grid
/// of π/20 and refined by golden-section search. Returns (area, population).
pub fn first_maximum(shape: &PulseShape, decay: &DecayConfig) -> Result<(f64, f64)> {
    let dt = shape.default_step();
    let pop = |a: f64| {
        final_state(BlochState::ground(), &shape.with_area(a), decay, dt).map(|s| s.population_e)
    };
    let step = PI / 20.0;
    let mut prev = pop(0.0)?;
    let mut cur = pop(step)?;
    let mut k = 1;
    loop {
        let next = pop((k + 1) as f64 * step)?;
        if cur > prev && cur >= next {
            break;
        }
        if k > 200 {
            return Err(Error::NoMaximum);
        }
        prev = cur;
        cur = next;
        k += 1;
    }
    let (mut lo, mut hi) = ((k - 1) as f64 * step, (k + 1) as f64 * step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = pop(x1)?;
    let mut f2 = pop(x2)?;
    while hi - lo > 1e-7 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = pop(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = pop(x1)?;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok((a, pop(a)?))
}

/// Loss rate (1/ns) for which the first maximum equals `target`.
pub fn loss_for_fidelity(target: f64, shape: &PulseShape, base: &DecayConfig) -> Result<f64> {
    let fid = |g: f64| {
        first_maximum(
            shape,
            &DecayConfig {
                gamma_loss: g,
                ..*base
            },
        )
        .map(|m| m.1)
    };
    let f0 = fid(0.0)?;
    if !(target > 0.0 && target < f0) {
        return Err(Error::Domain(format!(
            "target fidelity {target} not reachable (undamped maximum {f0})"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while fid(hi)? > target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Domain("loss rate diverged".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fid(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiOptions {
    pub shape: PulseShape,
    /// 1/ns, held fixed.
    pub gamma_rad: f64,
    /// Starting / fixed pure dephasing rate, 1/ns.
    pub gamma_deph: f64,
    pub fit_deph: bool,
    pub lm: LmConfig,
}

impl Default for RabiOptions {
    fn default() -> Self {
        Self {
            shape: PulseShape::default(),
            gamma_rad: 1.0 / 1.71,
            gamma_deph: 0.0,
            fit_deph: false,
            lm: LmConfig {
                allow_singular: true,
                ..LmConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiFit {
    pub fit: FitResult,
    pub fidelity: Estimate,
}

/// Parameters: amplitude, calibration (rad per √power unit), gamma_loss,
/// gamma_deph.
struct RabiModel {
    shape: PulseShape,
    gamma_rad: f64,
}

impl RabiModel {
    fn decay(&self, p: &[f64]) -> DecayConfig {
        DecayConfig {
            gamma_rad: self.gamma_rad,
            gamma_deph: p[3].max(0.0),
            gamma_loss: p[2].max(0.0),
        }
    }
}

impl Model for RabiModel {
    fn predict(&self, p: &[f64], x: &[f64], out: &mut [f64]) {
        let decay = self.decay(p);
        let dt = self.shape.default_step();
        let ys: Vec<f64> = x
            .par_iter()
            .map(|&xi| {
                final_state(
                    BlochState::ground(),
                    &self.shape.with_area(p[1] * xi.max(0.0)),
                    &decay,
                    dt,
                )
                .map(|s| p[0] * s.population_e)
                .unwrap_or(f64::NAN)
            })
            .collect();
        out.copy_from_slice(&ys);
    }
}

/// Fits intensity against √power with the Bloch solver as forward model
/// (pulse area = calibration·√power).
pub fn fit_rabi(sqrt_power: &[f64], intensity: &[f64], opts: &RabiOptions) -> Result<RabiFit> {
    if sqrt_power.len() < 10 {
        return Err(Error::Precondition(
            "Rabi fit needs at least 10 points".into(),
        ));
    }
    let data = FitData::uniform(sqrt_power.to_vec(), intensity.to_vec())?;
    let model = RabiModel {
        shape: opts.shape,
        gamma_rad: opts.gamma_rad,
    };

    // first data maximum sets the π-area calibration
    let n = intensity.len();
    let k_peak = (1..n - 1)
        .find(|&k| intensity[k] > intensity[k - 1] && intensity[k] >= intensity[k + 1])
        .unwrap_or_else(|| {
            (0..n)
                .max_by(|&i, &j| intensity[i].total_cmp(&intensity[j]))
                .unwrap()
        });
    let x_peak = sqrt_power[k_peak].max(1e-12);
    let k0 = PI / x_peak;

    // coarse search over loss rate and calibration with the amplitude
    // solved in closed form
    let mut best = (f64::INFINITY, 1.0, k0, 0.0);
    for &g in &[0.0, 3.0, 10.0, 30.0, 100.0, 300.0] {
        for &m in &[0.85, 0.95, 1.05, 1.15] {
            let p = [1.0, k0 * m, g, opts.gamma_deph];
            let mut f = vec![0.0; n];
            model.predict(&p, sqrt_power, &mut f);
            let ff: f64 = f.iter().map(|v| v * v).sum();
            if !(ff > 0.0) {
                continue;
            }
            let amp = f.iter().zip(intensity).map(|(a, b)| a * b).sum::<f64>() / ff;
            let chi: f64 = f
                .iter()
                .zip(intensity)
                .map(|(a, b)| (amp * a - b).powi(2))
                .sum();
            if chi < best.0 {
                best = (chi, amp.max(1e-12), k0 * m, g);
            }
        }
    }
    let specs = vec![
        ParamSpec::new("amplitude", best.1).lower(0.0),
        ParamSpec::new("calibration", best.2).lower(0.0),
        ParamSpec::new("gamma_loss", best.3).lower(0.0).scale(10.0),
        ParamSpec::new("gamma_deph", opts.gamma_deph)
            .lower(0.0)
            .scale(1.0)
            .fixed(!opts.fit_deph),
    ];
    let mut fit = nlls_fit(&model, &data, &specs, &opts.lm, "rabi")?;
    let shape = opts.shape;
    let fidelity = propagate(&fit, &specs, |p| {
        first_maximum(&shape, &model.decay(p))
            .map(|m| m.1)
            .unwrap_or(f64::NAN)
    });
    if !fidelity.value.is_finite() {
        fit.flags.push("fidelity undefined".into());
    }
    fit.derived.insert("fidelity".into(), fidelity);
    let loose = fit
        .params
        .iter()
        .filter(|(name, _)| *name != "gamma_deph" || opts.fit_deph)
        .any(|(_, e)| e.sigma.is_some_and(|s| !s.is_finite() || s > e.value.abs()));
    if loose && !fit.has_flag("unbounded-parameter") {
        fit.flags.push("unbounded-parameter".into());
    }
    Ok(RabiFit { fit, fidelity })
}
