//! Aggregation of per-emitter fits into a coherence overview table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{coherence_time, G1Curve};
use crate::types::{FitResult, VoigtParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Better {
    Lower,
    Higher,
}

struct RowSpec {
    label: &'static str,
    key: &'static str,
    unit: &'static str,
    model: Source,
    field: &'static str,
    better: Better,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Width,
    Lifetime,
}

const ROWS: [RowSpec; 7] = [
    RowSpec {
        label: "Γ_FWHM",
        key: "gamma_fwhm",
        unit: "GHz",
        model: Source::Width,
        field: "fwhm",
        better: Better::Lower,
    },
    RowSpec {
        label: "T₂",
        key: "t2",
        unit: "ns",
        model: Source::Width,
        field: "t2",
        better: Better::Higher,
    },
    RowSpec {
        label: "Γ_inhom",
        key: "gamma_inhom",
        unit: "GHz",
        model: Source::Width,
        field: "gamma_inhom",
        better: Better::Lower,
    },
    RowSpec {
        label: "Γ_hom",
        key: "gamma_hom",
        unit: "GHz",
        model: Source::Width,
        field: "gamma_hom",
        better: Better::Lower,
    },
    RowSpec {
        label: "T₁",
        key: "t1",
        unit: "ns",
        model: Source::Lifetime,
        field: "t1",
        better: Better::Higher,
    },
    RowSpec {
        label: "Γ_FT",
        key: "gamma_ft",
        unit: "GHz",
        model: Source::Lifetime,
        field: "gamma_ft",
        better: Better::Lower,
    },
    RowSpec {
        label: "T₂,FT",
        key: "t2_ft",
        unit: "ns",
        model: Source::Lifetime,
        field: "t2_ft",
        better: Better::Higher,
    },
];

/// One quantity aggregated over emitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub key: String,
    pub unit: String,
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; absent for fewer than two values.
    pub std: Option<f64>,
    /// Most coherent value: narrowest width or longest time.
    pub best: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// Model that supplied the linewidths: "mi" or "scan".
    pub width_source: Option<String>,
    pub fits: usize,
    pub rows: Vec<ReportRow>,
    /// T₂ of the Voigt profile built from the mean widths, next to the
    /// mean of per-emitter T₂ values.
    pub t2_from_mean_widths: Option<f64>,
}

fn stats(values: &[f64], better: Better) -> (Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    let best = match better {
        Better::Lower => values.iter().copied().fold(f64::INFINITY, f64::min),
        Better::Higher => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    (Some(mean), std, Some(best))
}

pub fn build_report(fits: &[FitResult]) -> Result<CoherenceReport> {
    if fits.is_empty() {
        return Err(Error::Aggregation("no fits to aggregate".into()));
    }
    let mut width_source: Option<&str> = None;
    for f in fits {
        match f.model.as_str() {
            "tcspc" => {}
            m @ ("mi" | "scan") => match width_source {
                Some(s) if s != m => {
                    return Err(Error::Aggregation(format!(
                        "linewidths from both `{s}` and `{m}` fits; aggregate one kind at a time"
                    )))
                }
                _ => width_source = Some(m),
            },
            other => {
                return Err(Error::Aggregation(format!(
                    "`{other}` fits carry no coherence-table quantities"
                )))
            }
        }
    }

    let rows: Vec<ReportRow> = ROWS
        .iter()
        .map(|row| {
            let values: Vec<f64> = fits
                .iter()
                .filter(|f| match row.model {
                    Source::Width => f.model != "tcspc",
                    Source::Lifetime => f.model == "tcspc",
                })
                .filter_map(|f| f.value(row.field))
                .collect();
            let (mean, std, best) = stats(&values, row.better);
            ReportRow {
                label: row.label.into(),
                key: row.key.into(),
                unit: row.unit.into(),
                n: values.len(),
                mean,
                std,
                best,
            }
        })
        .collect();

    let mean_of = |key: &str| rows.iter().find(|r| r.key == key).and_then(|r| r.mean);
    let t2_from_mean_widths = match (mean_of("gamma_hom"), mean_of("gamma_inhom")) {
        (Some(gh), Some(gi)) => coherence_time(&G1Curve::Voigt(VoigtParams::widths(gh, gi))).ok(),
        _ => None,
    };
    Ok(CoherenceReport {
        width_source: width_source.map(str::to_string),
        fits: fits.len(),
        rows,
        t2_from_mean_widths,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

impl CoherenceReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>5} {:>3} {:>12} {:>12} {:>12}",
            "quantity", "unit", "n", "mean", "std", "best"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:>5} {:>3} {:>12} {:>12} {:>12}",
                r.label,
                r.unit,
                r.n,
                cell(r.mean),
                cell(r.std),
                cell(r.best)
            );
        }
        if let Some(t2) = self.t2_from_mean_widths {
            let _ = writeln!(s, "T₂ from mean widths: {t2:.4} ns");
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row(&self, key: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.key == key)
    }
}
