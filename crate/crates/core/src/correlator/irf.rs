//! Convolution with a Gaussian instrument response.

use crate::units::FWHM_PER_SIGMA;

/// Kernel nodes per Gaussian sigma for the callable form.
const NODES_PER_SIGMA: f64 = 16.0;
/// Minimum nodes per sigma on the fine-grid path.
const GRID_NODES_PER_SIGMA: f64 = 10.0;
const HALF_WIDTH_SIGMAS: f64 = 6.0;

/// Unit-sum trapezoid weights of a Gaussian sampled at `offsets` (ps).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianKernel {
    /// Kernel with node spacing `step` ps; a zero FWHM gives the identity.
    pub fn with_step(fwhm_ps: f64, step: f64) -> Self {
        if fwhm_ps <= 0.0 {
            return Self {
                offsets: vec![0.0],
                weights: vec![1.0],
            };
        }
        let sigma = fwhm_ps / FWHM_PER_SIGMA;
        let half = (HALF_WIDTH_SIGMAS * sigma / step).ceil() as i64;
        let offsets: Vec<f64> = (-half..=half).map(|k| k as f64 * step).collect();
        let mut weights: Vec<f64> = offsets
            .iter()
            .map(|t| (-0.5 * (t / sigma).powi(2)).exp())
            .collect();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        Self { offsets, weights }
    }

    pub fn new(fwhm_ps: f64) -> Self {
        let sigma = fwhm_ps / FWHM_PER_SIGMA;
        Self::with_step(fwhm_ps, sigma / NODES_PER_SIGMA)
    }

    pub fn is_identity(&self) -> bool {
        self.weights.len() == 1
    }
}

/// `model` convolved with a unit-area Gaussian of FWHM `irf_fwhm_ps`.
pub fn convolve_irf<F>(model: F, irf_fwhm_ps: f64) -> impl Fn(f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let kernel = GaussianKernel::new(irf_fwhm_ps);
    move |tau| {
        kernel
            .offsets
            .iter()
            .zip(&kernel.weights)
            .map(|(o, w)| w * model(tau - o))
            .sum()
    }
}

/// Convolution evaluated at every `x` (ps). On a uniform grid the model is
/// evaluated once on a refined grid and convolved by discrete sums, which
/// is much cheaper than per-point quadrature.
pub fn convolve_on_grid<F>(model: F, x: &[f64], irf_fwhm_ps: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    if irf_fwhm_ps <= 0.0 || x.is_empty() {
        return x.iter().map(|&t| model(t)).collect();
    }
    let Some(dx) = uniform_step(x) else {
        let conv = convolve_irf(model, irf_fwhm_ps);
        return x.iter().map(|&t| conv(t)).collect();
    };
    let sigma = irf_fwhm_ps / FWHM_PER_SIGMA;
    let m = (dx * GRID_NODES_PER_SIGMA / sigma).ceil().max(1.0) as usize;
    let h = dx / m as f64;
    let kernel = GaussianKernel::with_step(irf_fwhm_ps, h);
    let half = (kernel.offsets.len() / 2) as i64;
    let n_fine = (x.len() - 1) * m + 1 + 2 * half as usize;
    let start = x[0] - half as f64 * h;
    let fine: Vec<f64> = (0..n_fine).map(|j| model(start + j as f64 * h)).collect();
    (0..x.len())
        .map(|k| {
            let c = k * m + half as usize;
            // y(x_k) = Σ_t w_t f(x_k - o_t); offsets are symmetric
            kernel
                .weights
                .iter()
                .enumerate()
                .map(|(t, w)| w * fine[c + t - half as usize])
                .sum()
        })
        .collect()
}

fn uniform_step(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if dx <= 0.0 {
        return None;
    }
    let ok = x
        .iter()
        .enumerate()
        .all(|(k, &v)| (v - (x[0] + k as f64 * dx)).abs() <= 1e-9 * dx.max(v.abs()));
    ok.then_some(dx)
}
