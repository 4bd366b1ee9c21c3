use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value with its 1σ uncertainty. `sigma` is `None` when it is not
/// defined (fixed parameter, parameter pinned at a bound, single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: Option<f64>,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self {
            value,
            sigma: sigma.is_finite().then_some(sigma),
        }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: None }
    }

    pub fn sigma_or_zero(&self) -> f64 {
        self.sigma.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// SHA-256 of the canonical JSON of the run configuration.
    pub config_hash: String,
}

/// Uniform output of every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, Estimate>,
    /// Row/column order of `covariance`.
    pub param_names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2_red: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    #[serde(default)]
    pub derived: BTreeMap<String, Estimate>,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params
            .get(name)
            .or_else(|| self.derived.get(name))
            .map(|e| e.value)
    }

    pub fn estimate(&self, name: &str) -> Option<Estimate> {
        self.params
            .get(name)
            .or_else(|| self.derived.get(name))
            .copied()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn values(&self) -> Vec<f64> {
        self.param_names
            .iter()
            .map(|n| self.params[n].value)
            .collect()
    }

    pub fn has_flag(&self, prefix: &str) -> bool {
        self.flags.iter().any(|f| f.starts_with(prefix))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
