use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::SegmentError;
use crate::robust::{self, MAD_TO_SIGMA};

/// First differences between consecutive bins. Entry `i` is `l[i+1] - l[i]`
/// and is `None` when either side is missing.
pub fn diff_series(series: &[Option<f64>]) -> Result<Vec<Option<f64>>, SegmentError> {
    let present = series.iter().filter(|v| v.is_some()).count();
    if present < 2 {
        return Err(SegmentError::TooShort { need: 2, got: present });
    }
    Ok(series
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect())
}

/// Edge threshold on the difference series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Threshold {
    pub theta: f64,
    pub median: f64,
    /// Spread the multiplier was applied to.
    pub spread: f64,
    /// The MAD was zero and the fallback spread was used.
    pub degenerate_spread: bool,
}

pub const MIN_THRESHOLD_SAMPLES: usize = 100;

/// `theta = median + c * 1.4826 * MAD`.
///
/// When the MAD is zero (more than half the differences equal the median) the
/// spread falls back to the mean absolute deviation about the median, scaled
/// by `sqrt(pi/2)` so it also estimates a Gaussian sigma. If that is zero as
/// well every difference equals the median and `theta` is the median.
pub fn robust_threshold(diffs: &[Option<f64>], c: f64) -> Result<Threshold, SegmentError> {
    let values: Vec<f64> = diffs.iter().flatten().copied().collect();
    if values.len() < MIN_THRESHOLD_SAMPLES {
        return Err(SegmentError::TooShort {
            need: MIN_THRESHOLD_SAMPLES,
            got: values.len(),
        });
    }
    let (median, mad) = robust::median_mad(&values).expect("non-empty");
    if mad > 0.0 {
        let spread = MAD_TO_SIGMA * mad;
        return Ok(Threshold {
            theta: median + c * spread,
            median,
            spread,
            degenerate_spread: false,
        });
    }
    let mean_abs = values.iter().map(|v| libm::fabs(v - median)).sum::<f64>() / values.len() as f64;
    let spread = mean_abs * libm::sqrt(core::f64::consts::FRAC_PI_2);
    Ok(Threshold {
        theta: median + c * spread,
        median,
        spread,
        degenerate_spread: true,
    })
}

/// Indices with `diff > theta`, thinned so that accepted edges are at least
/// `min_spacing` apart. Larger differences win; ties go to the earlier index.
/// Output is ascending.
pub fn detect_edges(diffs: &[Option<f64>], theta: f64, min_spacing: usize) -> Vec<usize> {
    let min_spacing = min_spacing.max(1);
    let mut candidates: Vec<(usize, f64)> = diffs
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.filter(|v| *v > theta).map(|v| (i, v)))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut accepted: BTreeSet<usize> = BTreeSet::new();
    for (i, _) in candidates {
        let lo = i.saturating_sub(min_spacing - 1);
        let hi = i.saturating_add(min_spacing - 1);
        if accepted.range(lo..=hi).next().is_none() {
            accepted.insert(i);
        }
    }
    accepted.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn some(xs: &[f64]) -> Vec<Option<f64>> {
        xs.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn differences() {
        assert_eq!(
            diff_series(&some(&[10.0, 15.0, 12.0])).unwrap(),
            vec![Some(5.0), Some(-3.0)]
        );
        assert_eq!(
            diff_series(&[Some(10.0), None, Some(12.0)]).unwrap(),
            vec![None, None]
        );
        assert!(diff_series(&some(&[4.0; 6])).unwrap().iter().all(|d| *d == Some(0.0)));
        assert!(matches!(
            diff_series(&[Some(1.0), None]),
            Err(SegmentError::TooShort { .. })
        ));
    }

    #[test]
    fn threshold_degenerate_spread_catches_lone_edge() {
        let mut d = vec![0.0; 200];
        d[50] = 50.0;
        let t = robust_threshold(&some(&d), 8.0).unwrap();
        assert!(t.degenerate_spread);
        assert!(t.theta < 50.0 && t.theta > 0.0, "{t:?}");
        assert_eq!(detect_edges(&some(&d), t.theta, 1), vec![50]);
    }

    #[test]
    fn zero_multiplier_is_median() {
        let d: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let t = robust_threshold(&some(&d), 0.0).unwrap();
        assert_eq!(t.theta, 50.0);
    }

    #[test]
    fn threshold_needs_enough_differences() {
        assert!(matches!(
            robust_threshold(&some(&[1.0; 99]), 8.0),
            Err(SegmentError::TooShort { need: 100, got: 99 })
        ));
    }

    #[test]
    fn edge_examples() {
        assert_eq!(detect_edges(&some(&[0.0, 0.0, 50.0, 0.0]), 10.0, 2), vec![2]);
        let mut d = vec![0.0; 400];
        d[100] = 40.0;
        d[150] = 60.0;
        assert_eq!(detect_edges(&some(&d), 10.0, 7500), vec![150]);
        assert!(detect_edges(&some(&[1.0, 2.0]), 10.0, 3).is_empty());
    }

    #[test]
    fn tie_prefers_earliest() {
        let mut d = vec![0.0; 50];
        d[10] = 20.0;
        d[12] = 20.0;
        assert_eq!(detect_edges(&some(&d), 5.0, 5), vec![10]);
        // Exactly min_spacing apart: both kept.
        d[15] = 20.0;
        assert_eq!(detect_edges(&some(&d), 5.0, 5), vec![10, 15]);
    }
}
