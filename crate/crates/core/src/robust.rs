//! Median and median absolute deviation.

use alloc::vec::Vec;

/// Consistency constant turning the raw MAD into a Gaussian sigma estimate.
pub const MAD_TO_SIGMA: f64 = 1.4826;

/// Median of `values`. Even-length inputs average the two middle order
/// statistics. Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut scratch: Vec<f64> = values.to_vec();
    median_in_place(&mut scratch)
}

/// Like [`median`] but reorders `values` instead of copying.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lower, upper_mid, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper_mid = *upper_mid;
    if n % 2 == 1 {
        Some(upper_mid)
    } else {
        let lower_mid = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower_mid + upper_mid))
    }
}

/// Median and raw (unscaled) median absolute deviation.
pub fn median_mad(values: &[f64]) -> Option<(f64, f64)> {
    let mut scratch: Vec<f64> = values.to_vec();
    let med = median_in_place(&mut scratch)?;
    for v in scratch.iter_mut() {
        *v = libm::fabs(*v - med);
    }
    let mad = median_in_place(&mut scratch)?;
    Some((med, mad))
}
