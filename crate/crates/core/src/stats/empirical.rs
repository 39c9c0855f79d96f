use alloc::vec::Vec;

use super::{check_q, check_samples, sorted_copy, Fit, FitError, FitMeta, LatencyModel, QuantileError};

/// The sample itself, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Empirical {
    sorted: Vec<f64>,
}

impl Empirical {
    pub fn from_samples(samples: &[f64]) -> Result<Self, FitError> {
        check_samples(samples, 1)?;
        Ok(Self {
            sorted: sorted_copy(samples),
        })
    }

    /// Takes an already sorted sample. Returns `None` when it is empty or
    /// out of order.
    pub fn from_sorted(sorted: Vec<f64>) -> Option<Self> {
        if sorted.is_empty() || sorted.windows(2).any(|w| w[0] > w[1]) {
            return None;
        }
        Some(Self { sorted })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn fit_empirical(samples: &[f64]) -> Result<Fit<Empirical>, FitError> {
    let model = Empirical::from_samples(samples)?;
    Ok(Fit {
        model,
        meta: FitMeta::closed_form(samples.len(), None),
    })
}

/// 1-based nearest rank `ceil(q * n)`, clamped to `[1, n]`.
pub(crate) fn nearest_rank(q: f64, n: usize) -> usize {
    // The nudge keeps exact products such as 0.99 * 1000 from rounding up.
    let r = libm::ceil(q * n as f64 - 1e-9);
    (r as usize).clamp(1, n)
}

/// Nearest-rank quantile of an unsorted sample.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64, FitError> {
    if samples.is_empty() {
        return Err(FitError::TooFew { need: 1, got: 0 });
    }
    if !(q > 0.0 && q < 1.0) {
        // Mirror the model contract: clamp to the extreme order statistics.
        let sorted = sorted_copy(samples);
        return Ok(if q <= 0.0 { sorted[0] } else { sorted[sorted.len() - 1] });
    }
    let mut scratch = samples.to_vec();
    let idx = nearest_rank(q, scratch.len()) - 1;
    let (_, v, _) = scratch.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

impl LatencyModel for Empirical {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    fn exceedance(&self, x: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&v| v <= x);
        above as f64 / self.sorted.len() as f64
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        check_q(q)?;
        Ok(self.sorted[nearest_rank(q, self.sorted.len()) - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_to(n: usize) -> Vec<f64> {
        (1..=n).rev().map(|i| i as f64).collect()
    }

    #[test]
    fn nearest_rank_examples() {
        assert_eq!(empirical_quantile(&[10.0], 0.99).unwrap(), 10.0);
        assert_eq!(empirical_quantile(&one_to(100), 0.5).unwrap(), 50.0);
        assert_eq!(empirical_quantile(&one_to(1000), 0.99).unwrap(), 990.0);
        assert_eq!(empirical_quantile(&one_to(100), 0.99).unwrap(), 99.0);
    }

    #[test]
    fn model_matches_free_function() {
        let m = Empirical::from_samples(&one_to(100)).unwrap();
        for q in [0.01, 0.25, 0.5, 0.99, 0.999] {
            assert_eq!(m.quantile(q).unwrap(), empirical_quantile(&one_to(100), q).unwrap());
        }
        assert_eq!(m.exceedance(99.0), 0.01);
        assert_eq!(m.exceedance(0.0), 1.0);
        assert_eq!(m.exceedance(100.0), 0.0);
    }

    #[test]
    fn empty_input() {
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(Empirical::from_samples(&[]).is_err());
        assert!(Empirical::from_sorted(alloc::vec![2.0, 1.0]).is_none());
    }
}
