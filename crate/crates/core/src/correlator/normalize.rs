use crate::error::{Error, Result};
use crate::types::Histogram;

/// Far-wing window |τ| ∈ [400, 500] ns, in ps.
pub const DEFAULT_NORM_WINDOW_PS: (f64, f64) = (400_000.0, 500_000.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Divide by the accidental level N_a·N_b·w/D expected for
    /// uncorrelated streams.
    PoissonRate,
    /// Divide by the mean count of bins whose centre has |τ| in
    /// `[inner_ps, outer_ps]`.
    FarWing { inner_ps: f64, outer_ps: f64 },
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::FarWing {
            inner_ps: DEFAULT_NORM_WINDOW_PS.0,
            outer_ps: DEFAULT_NORM_WINDOW_PS.1,
        }
    }
}

/// Returns a copy of `hist` whose `norm` maps counts to g².
pub fn normalize(hist: &Histogram, method: Normalization) -> Result<Histogram> {
    let norm = match method {
        Normalization::PoissonRate => {
            let m = &hist.meta;
            if m.duration_ps == 0 || m.events_a == 0 || m.events_b == 0 {
                return Err(Error::Normalization(
                    "stream metadata (events, duration) missing or zero".into(),
                ));
            }
            m.events_a as f64 * m.events_b as f64 * hist.bin_width_ps as f64 / m.duration_ps as f64
        }
        Normalization::FarWing { inner_ps, outer_ps } => {
            let (sum, n) = (0..hist.n_bins())
                .filter(|&k| {
                    let c = hist.bin_center(k).abs();
                    c >= inner_ps && c <= outer_ps
                })
                .fold((0u64, 0usize), |(s, n), k| (s + hist.counts[k], n + 1));
            if n == 0 {
                return Err(Error::Normalization(format!(
                    "no bins with |τ| in [{inner_ps}, {outer_ps}] ps"
                )));
            }
            sum as f64 / n as f64
        }
    };
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Normalization(
            "normalization window holds no counts".into(),
        ));
    }
    let mut out = hist.clone();
    out.norm = norm;
    Ok(out)
}
