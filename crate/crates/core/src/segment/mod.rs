//! Period detection and slicing.
//!
//! The boundary spike shows up as a sharp positive jump in the first
//! difference of the latency series. Jumps above a robust threshold are
//! thinned to at most one per period, folded onto within-period phase bins,
//! and the dominant phase (refined by a circular mean) becomes the reference
//! at which the series is cut into periods.

mod edges;
mod period;
mod phase;
mod profile;

use alloc::vec::Vec;

pub use edges::{detect_edges, diff_series, robust_threshold, Threshold, MIN_THRESHOLD_SAMPLES};
pub use period::{flag_lossy_periods, segment_trace, stable_core, CoreWindow, PeriodSlice};
pub use phase::{circular_distance, phase_histogram, refine_phase};
pub use profile::{mean_centered_profile, MeanCenteredProfile};

use crate::trace::LatencySeries;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("need at least {need} present values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("phase histogram is empty")]
    EmptyHistogram,
    #[error("trace does not contain a complete period")]
    NoCompletePeriod,
    #[error("excision windows leave no stable core")]
    InvalidWindow,
    #[error("no periods to average")]
    EmptyInput,
    #[error("within-period bin {0} is missing from every period")]
    UnobservedBin(usize),
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentationConfig {
    /// Bins per period.
    pub period: usize,
    /// Threshold multiplier on the robust spread of the differences.
    pub c: f64,
    /// Neighbourhood size for the circular refinement; odd.
    pub top_k_bins: usize,
    pub head_excise_ms: f64,
    pub tail_excise_ms: f64,
    /// Stable-core loss fraction above which a period is excluded.
    pub max_core_loss: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            period: 7500,
            c: 8.0,
            top_k_bins: 5,
            head_excise_ms: 140.0,
            tail_excise_ms: 75.0,
            max_core_loss: 0.05,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.period == 0 {
            return Err(SegmentError::InvalidConfig("period must be positive"));
        }
        if !(self.c > 0.0) {
            return Err(SegmentError::InvalidConfig("threshold multiplier must be positive"));
        }
        if self.top_k_bins.is_multiple_of(2) || self.top_k_bins >= self.period {
            return Err(SegmentError::InvalidConfig(
                "neighbourhood size must be odd and smaller than the period",
            ));
        }
        if !(0.0..=1.0).contains(&self.max_core_loss) {
            return Err(SegmentError::InvalidConfig("loss fraction must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn core_window(&self, dt_ms: f64) -> Result<CoreWindow, SegmentError> {
        CoreWindow::new(self.head_excise_ms, self.tail_excise_ms, dt_ms, self.period)
    }
}

/// Detected phase reference and the periods cut at it.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Refined phase, a real-valued bin in `[0, period)`.
    pub s_star: f64,
    pub period: usize,
    pub periods: Vec<PeriodSlice>,
    /// Phase histogram of accepted edges; empty when the phase was supplied.
    pub histogram: Vec<u32>,
    pub threshold: Option<Threshold>,
}

impl Segmentation {
    pub fn included(&self) -> impl Iterator<Item = &PeriodSlice> {
        self.periods.iter().filter(|p| !p.excluded)
    }
}

/// Global bin numbers of accepted edges in `series`.
pub fn edge_bins(series: &LatencySeries, config: &SegmentationConfig) -> Result<(Vec<u64>, Threshold), SegmentError> {
    let diffs = diff_series(&series.values)?;
    let threshold = robust_threshold(&diffs, config.c)?;
    let edges = detect_edges(&diffs, threshold.theta, config.period);
    // diffs[i] is the jump into bin i + 1.
    let bins = edges.iter().map(|&i| series.origin + i as u64 + 1).collect();
    Ok((bins, threshold))
}

/// The whole detection pipeline: edges, phase histogram, refinement,
/// slicing and loss flagging.
pub fn segment_series(series: &LatencySeries, config: &SegmentationConfig) -> Result<Segmentation, SegmentError> {
    config.validate()?;
    let window = config.core_window(series.dt_ms())?;
    let (bins, threshold) = edge_bins(series, config)?;
    let histogram = phase_histogram(&bins, config.period);
    let s_star = refine_phase(&histogram, config.top_k_bins)?;
    let mut seg = segment_trace(series, s_star, config.period)?;
    flag_lossy_periods(series, &mut seg, &window, config.max_core_loss);
    seg.histogram = histogram;
    seg.threshold = Some(threshold);
    Ok(seg)
}

/// Profile over the non-excluded periods of a segmentation.
pub fn profile_of(series: &LatencySeries, segmentation: &Segmentation) -> Result<MeanCenteredProfile, SegmentError> {
    let periods: Vec<Vec<Option<f64>>> = segmentation.included().map(|p| p.samples(series)).collect();
    mean_centered_profile(&periods)
}
