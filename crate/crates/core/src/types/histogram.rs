use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HistogramMeta {
    pub events_a: u64,
    pub events_b: u64,
    pub duration_ps: u64,
}

/// Delay histogram with half-open bins `[tau_min + k·w, tau_min + (k+1)·w)`.
///
/// `norm` maps counts to g² units: `g2 = counts / norm`. A raw histogram
/// carries `norm = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_ps: u64,
    pub tau_min_ps: i64,
    pub counts: Vec<u64>,
    pub norm: f64,
    pub meta: HistogramMeta,
}

impl Histogram {
    pub fn zeros(bin_width_ps: u64, tau_min_ps: i64, n_bins: usize, meta: HistogramMeta) -> Self {
        assert!(bin_width_ps > 0, "bin width must be positive");
        Self {
            bin_width_ps,
            tau_min_ps,
            counts: vec![0; n_bins],
            norm: 1.0,
            meta,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Exclusive upper edge of the last bin.
    pub fn tau_max_ps(&self) -> i64 {
        self.tau_min_ps + (self.counts.len() as i64) * self.bin_width_ps as i64
    }

    pub fn bin_left(&self, k: usize) -> i64 {
        self.tau_min_ps + k as i64 * self.bin_width_ps as i64
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.bin_left(k) as f64 + 0.5 * self.bin_width_ps as f64
    }

    pub fn centers_ps(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| self.bin_center(k)).collect()
    }

    /// `floor((tau - tau_min) / w)`, or `None` outside the histogram.
    pub fn bin_index(&self, tau_ps: i64) -> Option<usize> {
        if tau_ps < self.tau_min_ps || tau_ps >= self.tau_max_ps() {
            return None;
        }
        Some(((tau_ps - self.tau_min_ps) as u64 / self.bin_width_ps) as usize)
    }

    pub fn g2(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.norm).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.norm != 1.0
    }
}

fn header_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        line: 1,
        msg: msg.into(),
    }
}

pub fn write_histogram_to<W: Write>(h: &Histogram, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# bin_width_ps={} tau_min_ps={} norm={} events_a={} events_b={} duration_ps={}",
        h.bin_width_ps, h.tau_min_ps, h.norm, h.meta.events_a, h.meta.events_b, h.meta.duration_ps
    )?;
    for (k, &c) in h.counts.iter().enumerate() {
        writeln!(w, "{},{},{}", h.bin_left(k), c, c as f64 / h.norm)?;
    }
    w.flush()
}

pub fn write_histogram(h: &Histogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_histogram_to(h, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_histogram_from<R: BufRead>(reader: R) -> Result<Histogram> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| header_err("missing header"))?
        .map_err(|e| header_err(e.to_string()))?;
    let body = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| header_err("expected `# bin_width_ps=<w> tau_min_ps=<m> norm=<f>`"))?;
    let (mut w, mut m, mut norm) = (None, None, None);
    let mut meta = HistogramMeta::default();
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| header_err(format!("malformed header token `{token}`")))?;
        let bad = || header_err(format!("bad value for `{key}`: `{value}`"));
        match key {
            "bin_width_ps" => w = Some(value.parse::<u64>().map_err(|_| bad())?),
            "tau_min_ps" => m = Some(value.parse::<i64>().map_err(|_| bad())?),
            "norm" => norm = Some(value.parse::<f64>().map_err(|_| bad())?),
            "events_a" => meta.events_a = value.parse().map_err(|_| bad())?,
            "events_b" => meta.events_b = value.parse().map_err(|_| bad())?,
            "duration_ps" => meta.duration_ps = value.parse().map_err(|_| bad())?,
            _ => {}
        }
    }
    let (bin_width_ps, tau_min_ps, norm) = match (w, m, norm) {
        (Some(w), Some(m), Some(n)) if w > 0 && n > 0.0 && n.is_finite() => (w, m, n),
        _ => {
            return Err(header_err(
                "header needs positive bin_width_ps, tau_min_ps and positive norm",
            ))
        }
    };
    let mut counts = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = |msg: String| Error::Parse { line: lineno, msg };
        let tau: i64 = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(format!("bad tau in `{line}`")))?;
        let c: u64 = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(format!("bad count in `{line}`")))?;
        let expected = tau_min_ps + counts.len() as i64 * bin_width_ps as i64;
        if tau != expected {
            return Err(parse_err(format!(
                "bin edge {tau} does not continue the grid (expected {expected})"
            )));
        }
        counts.push(c);
    }
    Ok(Histogram {
        bin_width_ps,
        tau_min_ps,
        counts,
        norm,
        meta,
    })
}

pub fn read_histogram(path: impl AsRef<Path>) -> Result<Histogram> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_histogram_from(BufReader::new(file))
}
