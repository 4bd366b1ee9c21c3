//! Damped least squares (Levenberg–Marquardt) with bound transforms.
//!
//! The iteration runs in an unconstrained internal space. Bounded
//! parameters are mapped with the MINUIT transforms (sine for two-sided,
//! square root for one-sided bounds), so every trial point is feasible.
//! The Jacobian is a central difference of the model predictions. After
//! convergence the covariance is computed in external coordinates as
//! (JᵀWJ)⁻¹·χ²_red.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::{Estimate, FitResult};

/// A model predicting `y` at every `x` for one parameter vector.
pub trait Model: Sync {
    fn predict(&self, params: &[f64], x: &[f64], out: &mut [f64]);
}

/// Adapts a pointwise function `f(x, params)` to [`Model`].
pub struct PointModel<F>(pub F);

impl<F> Model for PointModel<F>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    fn predict(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = (self.0)(xi, params);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub init: f64,
    pub lower: f64,
    pub upper: f64,
    pub fixed: bool,
    /// Typical magnitude; sets finite-difference steps near zero.
    pub scale: f64,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, init: f64) -> Self {
        Self {
            name: name.into(),
            init,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            fixed: false,
            scale: init.abs().max(1e-3),
        }
    }

    pub fn bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn lower(mut self, lower: f64) -> Self {
        self.lower = lower;
        self
    }

    pub fn fixed(mut self, fixed: bool) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn scale(mut self, scale: f64) -> Self {
        self.scale = scale.abs();
        self
    }
}

/// Observations with statistical weights `w = 1/σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FitData {
    pub fn new(x: Vec<f64>, y: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != weights.len() {
            return Err(Error::Precondition(
                "x, y and weights must have equal length".into(),
            ));
        }
        if x.iter().chain(&y).chain(&weights).any(|v| !v.is_finite())
            || weights.iter().any(|&w| w < 0.0)
        {
            return Err(Error::Precondition(
                "data must be finite with non-negative weights".into(),
            ));
        }
        Ok(Self { x, y, weights })
    }

    pub fn uniform(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; x.len()];
        Self::new(x, y, w)
    }

    /// Counting statistics: `w = 1/max(y, 1)`.
    pub fn poisson(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let w = y.iter().map(|&c| 1.0 / c.max(1.0)).collect();
        Self::new(x, y, w)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Relative internal step below which the fit has converged.
    pub xtol: f64,
    /// Gradient infinity-norm (relative to max(1, χ²)) below which the fit
    /// has converged.
    pub gtol: f64,
    /// Report a singular normal matrix at the solution as an
    /// `unbounded-parameter` flag instead of failing.
    pub allow_singular: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            xtol: 1e-8,
            gtol: 1e-10,
            allow_singular: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Transform {
    Free,
    Lower(f64),
    Upper(f64),
    Both(f64, f64),
}

impl Transform {
    fn of(spec: &ParamSpec) -> Self {
        match (spec.lower.is_finite(), spec.upper.is_finite()) {
            (false, false) => Transform::Free,
            (true, false) => Transform::Lower(spec.lower),
            (false, true) => Transform::Upper(spec.upper),
            (true, true) => Transform::Both(spec.lower, spec.upper),
        }
    }

    fn to_external(self, q: f64) -> f64 {
        match self {
            Transform::Free => q,
            Transform::Lower(lo) => lo - 1.0 + (q * q + 1.0).sqrt(),
            Transform::Upper(hi) => hi + 1.0 - (q * q + 1.0).sqrt(),
            Transform::Both(lo, hi) => lo + (hi - lo) * 0.5 * (q.sin() + 1.0),
        }
    }

    fn to_internal(self, p: f64) -> f64 {
        // A parameter started exactly on a bound would have a zero
        // derivative in internal space; start it a hair inside.
        const NUDGE: f64 = 1e-4;
        match self {
            Transform::Free => p,
            Transform::Lower(lo) => {
                let q = ((p - lo + 1.0).powi(2) - 1.0).max(0.0).sqrt();
                q.max(NUDGE)
            }
            Transform::Upper(hi) => {
                let q = ((hi - p + 1.0).powi(2) - 1.0).max(0.0).sqrt();
                q.max(NUDGE)
            }
            Transform::Both(lo, hi) => {
                let s = (2.0 * (p - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
                s.asin().clamp(
                    -std::f64::consts::FRAC_PI_2 + NUDGE,
                    std::f64::consts::FRAC_PI_2 - NUDGE,
                )
            }
        }
    }
}

struct Problem<'a> {
    model: &'a dyn Model,
    data: &'a FitData,
    specs: &'a [ParamSpec],
    free: Vec<usize>,
    transforms: Vec<Transform>,
    sqrt_w: Vec<f64>,
}

impl Problem<'_> {
    fn external(&self, q: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = self.specs.iter().map(|s| s.init).collect();
        for (k, &i) in self.free.iter().enumerate() {
            p[i] = self.transforms[k].to_external(q[k]);
        }
        p
    }

    fn predict(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.data.len()];
        self.model.predict(p, &self.data.x, &mut out);
        out
    }

    /// Weighted residuals sqrt(w)·(y - f).
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let f = self.predict(p);
        DVector::from_iterator(
            f.len(),
            f.iter()
                .zip(&self.data.y)
                .zip(&self.sqrt_w)
                .map(|((fi, yi), sw)| sw * (yi - fi)),
        )
    }

    /// Weighted Jacobian of the predictions with respect to internal parameters.
    fn jacobian_internal(&self, q: &[f64]) -> DMatrix<f64> {
        let n = self.data.len();
        let mut jac = DMatrix::zeros(n, self.free.len());
        let mut qq = q.to_vec();
        for k in 0..self.free.len() {
            let spec = &self.specs[self.free[k]];
            let h = 6e-6 * q[k].abs().max(spec.scale.max(1e-12));
            qq[k] = q[k] + h;
            let fp = self.predict(&self.external(&qq));
            qq[k] = q[k] - h;
            let fm = self.predict(&self.external(&qq));
            qq[k] = q[k];
            for i in 0..n {
                jac[(i, k)] = self.sqrt_w[i] * (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }
}

fn chi2(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Step size used for external-coordinate differences of parameter `spec`
/// at value `p`.
pub(crate) fn external_step(spec: &ParamSpec, p: f64) -> f64 {
    6e-6 * p.abs().max(spec.scale.max(1e-12))
}

/// Finite-difference derivative of the predictions with respect to one
/// external parameter; steps inward when the parameter sits near a bound.
fn external_column(
    model: &dyn Model,
    x: &[f64],
    p: &[f64],
    spec: &ParamSpec,
    index: usize,
) -> Vec<f64> {
    let h = external_step(spec, p[index]);
    let mut pp = p.to_vec();
    let mut eval = |v: f64| {
        pp[index] = v;
        let mut out = vec![0.0; x.len()];
        model.predict(&pp, x, &mut out);
        out
    };
    let v = p[index];
    if v - h < spec.lower {
        let f0 = eval(v);
        let f1 = eval(v + h);
        f0.iter().zip(&f1).map(|(a, b)| (b - a) / h).collect()
    } else if v + h > spec.upper {
        let f0 = eval(v);
        let f1 = eval(v - h);
        f0.iter().zip(&f1).map(|(a, b)| (a - b) / h).collect()
    } else {
        let fp = eval(v + h);
        let fm = eval(v - h);
        fp.iter()
            .zip(&fm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect()
    }
}

/// Numeric Jacobian of the model predictions in external coordinates
/// (unweighted), one column per entry of `params`.
pub fn numeric_jacobian(
    model: &dyn Model,
    x: &[f64],
    params: &[f64],
    specs: &[ParamSpec],
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(x.len(), params.len());
    for (j, spec) in specs.iter().enumerate() {
        let col = external_column(model, x, params, spec, j);
        for (i, v) in col.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    jac
}

/// Rejects normal matrices whose scaled (correlation) form is numerically
/// singular; a plain Cholesky can succeed on those through round-off.
fn check_rank(normal: &DMatrix<f64>) -> Result<()> {
    let d: Vec<f64> = normal.diagonal().iter().map(|v| v.sqrt()).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit(
            "a free parameter has no influence on the model".into(),
        ));
    }
    let scaled = DMatrix::from_fn(normal.nrows(), normal.ncols(), |i, j| {
        normal[(i, j)] / (d[i] * d[j])
    });
    let eig = scaled.symmetric_eigenvalues();
    if eig.min() < 1e-13 * eig.max() {
        return Err(Error::DegenerateFit(
            "free parameters are not independently identifiable".into(),
        ));
    }
    Ok(())
}

fn validate(data: &FitData, specs: &[ParamSpec]) -> Result<()> {
    let n_free = specs.iter().filter(|s| !s.fixed).count();
    if data.len() < n_free + 2 {
        return Err(Error::Precondition(format!(
            "{} points cannot constrain {} free parameters (need ≥ {})",
            data.len(),
            n_free,
            n_free + 2
        )));
    }
    for s in specs {
        if !s.init.is_finite() {
            return Err(Error::Precondition(format!(
                "initial `{}` is not finite",
                s.name
            )));
        }
        if !(s.lower < s.upper) {
            return Err(Error::Precondition(format!(
                "empty bounds for `{}`",
                s.name
            )));
        }
        if s.init < s.lower || s.init > s.upper {
            return Err(Error::Precondition(format!(
                "initial `{}` = {} outside bounds [{}, {}]",
                s.name, s.init, s.lower, s.upper
            )));
        }
    }
    Ok(())
}

/// Weighted nonlinear least squares. `model_name` is recorded in the result.
pub fn nlls_fit(
    model: &dyn Model,
    data: &FitData,
    specs: &[ParamSpec],
    cfg: &LmConfig,
    model_name: &str,
) -> Result<FitResult> {
    validate(data, specs)?;
    let free: Vec<usize> = (0..specs.len()).filter(|&i| !specs[i].fixed).collect();
    let transforms: Vec<Transform> = free.iter().map(|&i| Transform::of(&specs[i])).collect();
    let problem = Problem {
        model,
        data,
        specs,
        free: free.clone(),
        transforms: transforms.clone(),
        sqrt_w: data.weights.iter().map(|w| w.sqrt()).collect(),
    };

    let mut q: Vec<f64> = free
        .iter()
        .zip(&transforms)
        .map(|(&i, t)| t.to_internal(specs[i].init))
        .collect();
    let mut r = problem.residuals(&problem.external(&q));
    let mut cost = chi2(&r);
    if !cost.is_finite() {
        return Err(Error::Precondition(
            "model is not finite at the initial guess".into(),
        ));
    }

    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut converged = free.is_empty();
    let mut gradient_norm = 0.0;
    let mut jac = problem.jacobian_internal(&q);

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        gradient_norm = g.amax();
        if gradient_norm <= cfg.gtol * cost.max(1.0) {
            converged = true;
            break;
        }
        let diag_max = a.diagonal().max().max(f64::MIN_POSITIVE);
        if diag_max <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateFit(
                "model does not depend on any free parameter".into(),
            ));
        }
        let diag: DVector<f64> = a.diagonal().map(|d| d.max(1e-12 * diag_max));

        let mut accepted = false;
        while !accepted {
            let mut damped = a.clone();
            for k in 0..damped.nrows() {
                damped[(k, k)] += lambda * diag[k];
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > 1e30 {
                    if cfg.allow_singular {
                        break;
                    }
                    return Err(Error::DegenerateFit("normal matrix is singular".into()));
                }
                continue;
            };
            let step = chol.solve(&g);
            let q_new: Vec<f64> = q.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_new = problem.residuals(&problem.external(&q_new));
            let cost_new = chi2(&r_new);
            let predicted = step.dot(&(lambda * step.component_mul(&diag) + &g));
            let rho = if predicted > 0.0 {
                (cost - cost_new) / predicted
            } else {
                -1.0
            };
            if cost_new.is_finite() && rho > 0.0 {
                let step_norm = step.norm();
                let q_norm = q_new.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_drop = (cost - cost_new) / cost.max(f64::MIN_POSITIVE);
                q = q_new;
                r = r_new;
                cost = cost_new;
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                accepted = true;
                jac = problem.jacobian_internal(&q);
                if step_norm <= cfg.xtol * (q_norm + cfg.xtol) || rel_drop < 1e-15 {
                    converged = true;
                }
            } else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > 1e20 {
                    // No downhill direction left at working precision.
                    let g_now = (jac.transpose() * &r).amax();
                    gradient_norm = g_now;
                    converged = g_now <= 1e-6 * cost.max(1.0);
                    break;
                }
            }
        }
        if !accepted {
            break;
        }
    }
    if converged {
        gradient_norm = (jac.transpose() * &r).amax();
    }

    let p = problem.external(&q);
    let n_free = free.len();
    let dof = (data.len() - n_free).max(1);
    let chi2_red = cost / dof as f64;

    let mut flags = Vec::new();
    if !converged {
        flags.push(format!("not converged after {iterations} iterations"));
    }

    // Parameters resting on a bound carry no curvature information.
    let mut pinned = vec![false; specs.len()];
    for &i in &free {
        let s = &specs[i];
        let tol = 1e-6 * s.scale.max(1e-12);
        if (p[i] - s.lower).abs() <= tol || (s.upper - p[i]).abs() <= tol {
            pinned[i] = true;
            flags.push(format!("{} at bound", s.name));
        }
    }
    let active: Vec<usize> = free.iter().copied().filter(|&i| !pinned[i]).collect();

    let mut covariance = vec![vec![0.0; specs.len()]; specs.len()];
    let mut singular = false;
    if !active.is_empty() {
        let mut jw = DMatrix::zeros(data.len(), active.len());
        for (k, &i) in active.iter().enumerate() {
            let col = external_column(model, &data.x, &p, &specs[i], i);
            for (row, v) in col.into_iter().enumerate() {
                jw[(row, k)] = problem.sqrt_w[row] * v;
            }
        }
        let normal = jw.transpose() * &jw;
        let inv = check_rank(&normal).and_then(|_| {
            normal.cholesky().map(|c| c.inverse()).ok_or_else(|| {
                Error::DegenerateFit("normal matrix is singular at the solution".into())
            })
        });
        match inv {
            Ok(inv) => {
                for (a, &i) in active.iter().enumerate() {
                    for (b, &j) in active.iter().enumerate() {
                        covariance[i][j] = inv[(a, b)] * chi2_red;
                    }
                }
            }
            Err(_) if cfg.allow_singular => {
                singular = true;
                flags.push("unbounded-parameter".into());
            }
            Err(e) => return Err(e),
        }
    }

    let mut params = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        let sigma = if s.fixed || pinned[i] || singular {
            None
        } else {
            Some(covariance[i][i].max(0.0).sqrt())
        };
        params.insert(s.name.clone(), Estimate { value: p[i], sigma });
    }

    Ok(FitResult {
        model: model_name.to_string(),
        params,
        param_names: specs.iter().map(|s| s.name.clone()).collect(),
        covariance,
        chi2_red,
        converged,
        iterations,
        gradient_norm,
        derived: BTreeMap::new(),
        flags,
        provenance: None,
    })
}

/// First-order error propagation of a scalar function of the fitted
/// parameters: σ² = ∇fᵀ·C·∇f with a central-difference gradient.
pub fn propagate(fit: &FitResult, specs: &[ParamSpec], f: impl Fn(&[f64]) -> f64) -> Estimate {
    let p = fit.values();
    let value = f(&p);
    let n = p.len();
    let mut grad = vec![0.0; n];
    let mut pp = p.clone();
    for j in 0..n {
        if fit.covariance[j][j] == 0.0 {
            continue;
        }
        let h = external_step(&specs[j], p[j]);
        pp[j] = p[j] + h;
        let fp = f(&pp);
        pp[j] = p[j] - h;
        let fm = f(&pp);
        pp[j] = p[j];
        grad[j] = (fp - fm) / (2.0 * h);
    }
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            var += grad[i] * fit.covariance[i][j] * grad[j];
        }
    }
    Estimate::new(value, var.max(0.0).sqrt())
}
