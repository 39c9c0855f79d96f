use alloc::vec::Vec;

use super::{SegmentError, Segmentation};
use crate::trace::LatencySeries;

/// One complete period `[start_bin, end_bin)` in global bin numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodSlice {
    pub p: usize,
    pub start_bin: u64,
    pub end_bin: u64,
    /// Too many probes lost in the stable core.
    pub excluded: bool,
}

impl PeriodSlice {
    pub fn len(&self) -> usize {
        (self.end_bin - self.start_bin) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end_bin == self.start_bin
    }

    pub fn samples(&self, series: &LatencySeries) -> Vec<Option<f64>> {
        series.window(self.start_bin, self.end_bin)
    }
}

/// Cuts `series` into every complete period aligned to phase `s_star`.
/// Partial periods at either end are dropped.
pub fn segment_trace(
    series: &LatencySeries,
    s_star: f64,
    period: usize,
) -> Result<Segmentation, SegmentError> {
    if period == 0 {
        return Err(SegmentError::InvalidConfig("period must be positive"));
    }
    let s = period as u64;
    let anchor = (libm::round(s_star) as i64).rem_euclid(period as i64) as u64;
    let first = series.origin + (anchor + s - series.origin % s) % s;
    let end = series.end_bin();
    let mut periods = Vec::new();
    let mut start = first;
    while start + s <= end {
        periods.push(PeriodSlice {
            p: periods.len(),
            start_bin: start,
            end_bin: start + s,
            excluded: false,
        });
        start += s;
    }
    if periods.is_empty() {
        return Err(SegmentError::NoCompletePeriod);
    }
    Ok(Segmentation {
        s_star,
        period,
        periods,
        histogram: Vec::new(),
        threshold: None,
    })
}

/// Within-period bins `[start, end)` left after excising the boundary spikes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoreWindow {
    pub start: usize,
    pub end: usize,
}

impl CoreWindow {
    /// Fractional bin counts round outward, so more is excised rather than
    /// less.
    pub fn new(head_ms: f64, tail_ms: f64, dt_ms: f64, period: usize) -> Result<Self, SegmentError> {
        if !(head_ms >= 0.0 && tail_ms >= 0.0 && dt_ms > 0.0) {
            return Err(SegmentError::InvalidWindow);
        }
        let head = bins_outward(head_ms / dt_ms);
        let tail = bins_outward(tail_ms / dt_ms);
        if head + tail >= period {
            return Err(SegmentError::InvalidWindow);
        }
        Ok(Self {
            start: head,
            end: period - tail,
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, s: usize) -> bool {
        s >= self.start && s < self.end
    }
}

fn bins_outward(x: f64) -> usize {
    // Ratios like 140 / 2 must not round up from representation error.
    libm::ceil(x - 1e-9).max(0.0) as usize
}

/// Stable-core samples of one period.
pub fn stable_core(series: &LatencySeries, slice: &PeriodSlice, window: &CoreWindow) -> Vec<Option<f64>> {
    let start = slice.start_bin + window.start as u64;
    let end = slice.start_bin + window.end as u64;
    series.window(start, end)
}

/// Marks periods whose stable core lost more than `max_loss` of its probes.
pub fn flag_lossy_periods(
    series: &LatencySeries,
    segmentation: &mut Segmentation,
    window: &CoreWindow,
    max_loss: f64,
) {
    for slice in segmentation.periods.iter_mut() {
        let core = stable_core(series, slice, window);
        let lost = core.iter().filter(|v| v.is_none()).count();
        slice.excluded = lost as f64 > max_loss * core.len() as f64;
    }
}
