use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape;

/// Voigt lineshape parameters. Widths are FWHM in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtParams {
    /// Lorentzian (homogeneous) FWHM.
    pub gamma_hom: f64,
    /// Gaussian (inhomogeneous) FWHM.
    pub gamma_inhom: f64,
    pub center: f64,
    pub amplitude: f64,
    pub offset: f64,
}

impl VoigtParams {
    /// Unit-amplitude profile centred at zero.
    pub fn widths(gamma_hom: f64, gamma_inhom: f64) -> Self {
        Self {
            gamma_hom,
            gamma_inhom,
            center: 0.0,
            amplitude: 1.0,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_hom >= 0.0 && self.gamma_inhom >= 0.0)
            || !self.gamma_hom.is_finite()
            || !self.gamma_inhom.is_finite()
        {
            return Err(Error::Domain(format!(
                "widths must be finite and non-negative (hom {}, inhom {})",
                self.gamma_hom, self.gamma_inhom
            )));
        }
        if self.gamma_hom == 0.0 && self.gamma_inhom == 0.0 {
            return Err(Error::DegenerateProfile);
        }
        Ok(())
    }

    /// Total FWHM (GHz).
    pub fn fwhm(&self) -> Result<f64> {
        lineshape::voigt_fwhm(self.gamma_hom, self.gamma_inhom)
    }
}

/// One row of a coherence overview: linewidths in GHz, times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub gamma_fwhm: Option<f64>,
    pub t2: Option<f64>,
    pub gamma_inhom: Option<f64>,
    pub gamma_hom: Option<f64>,
    pub t1: Option<f64>,
    pub gamma_ft: Option<f64>,
    pub t2_ft: Option<f64>,
}

impl CoherenceSummary {
    /// Summary carrying only the lifetime and its Fourier limit.
    pub fn from_lifetime(t1: f64) -> Result<Self> {
        let (t2_ft, gamma_ft) = lineshape::fourier_limit(t1)?;
        Ok(Self {
            gamma_fwhm: None,
            t2: None,
            gamma_inhom: None,
            gamma_hom: None,
            t1: Some(t1),
            gamma_ft: Some(gamma_ft),
            t2_ft: Some(t2_ft),
        })
    }

    /// Summary of a fitted Voigt lineshape.
    pub fn from_voigt(p: &VoigtParams) -> Result<Self> {
        Ok(Self {
            gamma_fwhm: Some(p.fwhm()?),
            t2: Some(lineshape::coherence_time(&lineshape::G1Curve::Voigt(*p))?),
            gamma_inhom: Some(p.gamma_inhom),
            gamma_hom: Some(p.gamma_hom),
            t1: None,
            gamma_ft: None,
            t2_ft: None,
        })
    }

    /// Checks the Fourier-limit relations and that T₂ does not beat T₂,FT.
    pub fn check(&self) -> Result<()> {
        if let Some(t1) = self.t1 {
            let (t2_ft, gamma_ft) = lineshape::fourier_limit(t1)?;
            let close =
                |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() <= 1e-12 * b.abs());
            if !close(self.t2_ft, t2_ft) || !close(self.gamma_ft, gamma_ft) {
                return Err(Error::Domain(
                    "Fourier-limit fields inconsistent with t1".into(),
                ));
            }
        }
        if let (Some(t2), Some(t2_ft)) = (self.t2, self.t2_ft) {
            if t2 > t2_ft {
                return Err(Error::Domain(format!(
                    "T2 = {t2} ns exceeds the Fourier limit {t2_ft} ns"
                )));
            }
        }
        Ok(())
    }
}
