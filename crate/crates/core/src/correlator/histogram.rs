use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Histogram, HistogramMeta, TagStream};

/// Which channels to correlate and on what delay grid.
///
/// Bins are edge aligned: the first bin starts at `-window_ps`, there are
/// `2·window/bin + 1` of them, and bin `k` covers
/// `[-window + k·bin, -window + (k+1)·bin)`. A pair with delay
/// `τ = t_b - t_a` is counted iff `-window ≤ τ < window + bin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationRequest {
    pub channel_a: u16,
    pub channel_b: u16,
    pub bin_width_ps: u64,
    pub window_ps: u64,
}

impl CorrelationRequest {
    pub fn new(channel_a: u16, channel_b: u16, bin_width_ps: u64, window_ps: u64) -> Self {
        Self {
            channel_a,
            channel_b,
            bin_width_ps,
            window_ps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_width_ps == 0 {
            return Err(Error::Precondition("bin width must be positive".into()));
        }
        if self.window_ps < 10 * self.bin_width_ps {
            return Err(Error::Precondition(format!(
                "window {} ps is narrower than 10 bins of {} ps",
                self.window_ps, self.bin_width_ps
            )));
        }
        if self.window_ps % self.bin_width_ps != 0 {
            return Err(Error::Precondition(format!(
                "window {} ps is not a multiple of the bin width {} ps",
                self.window_ps, self.bin_width_ps
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (2 * self.window_ps / self.bin_width_ps + 1) as usize
    }
}

fn check_sorted(times: &[u64], channel: u16) -> Result<()> {
    if let Some(i) = times.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Unsorted(format!(
            "channel {channel}: tag {} at {} ps precedes {} ps",
            i + 1,
            times[i + 1],
            times[i]
        )));
    }
    Ok(())
}

/// Full start–multi-stop correlation of the two channels of `tags`.
pub fn cross_correlate(tags: &TagStream, req: &CorrelationRequest) -> Result<Histogram> {
    let a = tags.channel_times(req.channel_a);
    let b = if req.channel_a == req.channel_b {
        a.clone()
    } else {
        tags.channel_times(req.channel_b)
    };
    let mut h = cross_correlate_times(&a, &b, req.channel_a == req.channel_b, req)?;
    h.meta.duration_ps = tags.duration_ps;
    Ok(h)
}

/// Correlates two sorted timestamp lists. With `same_channel` the lists are
/// the same detector and self-pairs (equal index) are skipped.
pub fn cross_correlate_times(
    a: &[u64],
    b: &[u64],
    same_channel: bool,
    req: &CorrelationRequest,
) -> Result<Histogram> {
    req.validate()?;
    check_sorted(a, req.channel_a)?;
    check_sorted(b, req.channel_b)?;
    let n_bins = req.n_bins();
    let w = req.bin_width_ps;
    let win = req.window_ps;
    let span = 2 * win + w;

    let chunk = (a.len() / (4 * rayon::current_num_threads()).max(1)).clamp(4096, 1 << 20);
    let partials: Vec<Vec<u64>> = a
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, block)| {
            let mut counts = vec![0u64; n_bins];
            let first = block[0];
            let mut lo = b.partition_point(|&t| t.saturating_add(win) < first);
            for (k, &ta) in block.iter().enumerate() {
                let i = ci * chunk + k;
                let start = ta.saturating_sub(win);
                while lo < b.len() && b[lo] < start {
                    lo += 1;
                }
                let mut j = lo;
                while j < b.len() {
                    // b[j] ≥ ta - win, so this is τ + win ≥ 0
                    let rel = b[j] + win - ta;
                    if rel >= span {
                        break;
                    }
                    if !(same_channel && j == i) {
                        counts[(rel / w) as usize] += 1;
                    }
                    j += 1;
                }
            }
            counts
        })
        .collect();

    let mut counts = vec![0u64; n_bins];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    let mut h = Histogram::zeros(
        w,
        -(win as i64),
        n_bins,
        HistogramMeta {
            events_a: a.len() as u64,
            events_b: b.len() as u64,
            duration_ps: 0,
        },
    );
    h.counts = counts;
    Ok(h)
}
