use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::SegmentError;

/// `h[s]` counts candidate bins `n` with `n mod period == s`.
pub fn phase_histogram(candidates: &[u64], period: usize) -> Vec<u32> {
    let mut h = vec![0u32; period];
    for &n in candidates {
        h[(n % period as u64) as usize] += 1;
    }
    h
}

/// Phase reference from a histogram: the dominant bin `s0` (earliest on
/// ties), refined by the count-weighted circular mean of the `k` bins centred
/// on it. The result lies in `[0, period)`.
pub fn refine_phase(h: &[u32], k: usize) -> Result<f64, SegmentError> {
    let period = h.len();
    let mut s0 = None;
    let mut best = 0u32;
    for (s, &c) in h.iter().enumerate() {
        if c > best {
            best = c;
            s0 = Some(s);
        }
    }
    let s0 = s0.ok_or(SegmentError::EmptyHistogram)?;
    let half = (k.max(1) - 1) / 2;

    // The angles are taken relative to s0 so that symmetric neighbourhoods
    // cancel exactly.
    let mut sin_acc = 0.0;
    let mut cos_acc = 0.0;
    let mut off_peak = 0u32;
    for d in -(half as i64)..=(half as i64) {
        let s = (s0 as i64 + d).rem_euclid(period as i64) as usize;
        let w = h[s] as f64;
        if d != 0 {
            off_peak += h[s];
        }
        let phi = TAU * d as f64 / period as f64;
        sin_acc += w * libm::sin(phi);
        cos_acc += w * libm::cos(phi);
    }
    if off_peak == 0 {
        return Ok(s0 as f64);
    }
    let offset = libm::atan2(sin_acc, cos_acc) * period as f64 / TAU;
    Ok(wrap(s0 as f64 + offset, period as f64))
}

/// `x mod p` in `[0, p)`.
pub(crate) fn wrap(x: f64, p: f64) -> f64 {
    let r = x % p;
    let r = if r < 0.0 { r + p } else { r };
    if r >= p {
        0.0
    } else {
        r
    }
}

/// Distance between two phases on a circle of `period` bins.
pub fn circular_distance(a: f64, b: f64, period: usize) -> f64 {
    let p = period as f64;
    let d = wrap(a - b, p);
    d.min(p - d)
}
