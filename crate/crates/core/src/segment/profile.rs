use alloc::vec;
use alloc::vec::Vec;

use super::SegmentError;

/// Average within-period shape after removing each period's own mean.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanCenteredProfile {
    /// Centred latency per within-period bin, ms.
    pub values: Vec<f64>,
    pub n_periods: usize,
}

/// Mean-centred profile of equally long periods.
///
/// Each period's mean uses its present samples only. Missing `(p, s)` pairs
/// are skipped and the bin is averaged over the periods that observed it.
/// Periods with no samples at all are ignored.
pub fn mean_centered_profile<P: AsRef<[Option<f64>]>>(
    periods: &[P],
) -> Result<MeanCenteredProfile, SegmentError> {
    let len = periods
        .first()
        .map(|p| p.as_ref().len())
        .ok_or(SegmentError::EmptyInput)?;
    let mut sums = vec![0.0; len];
    let mut counts = vec![0usize; len];
    let mut used = 0;
    for period in periods {
        let period = period.as_ref();
        if period.len() != len {
            return Err(SegmentError::InvalidConfig("periods differ in length"));
        }
        let (total, present) = period
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(t, c), v| (t + v, c + 1));
        if present == 0 {
            continue;
        }
        used += 1;
        let mean = total / present as f64;
        for (s, v) in period.iter().enumerate() {
            if let Some(v) = v {
                sums[s] += v - mean;
                counts[s] += 1;
            }
        }
    }
    if used == 0 {
        return Err(SegmentError::EmptyInput);
    }
    let values = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(s, (sum, &count))| {
            if count == 0 {
                Err(SegmentError::UnobservedBin(s))
            } else {
                Ok(sum / count as f64)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MeanCenteredProfile {
        values,
        n_periods: used,
    })
}
