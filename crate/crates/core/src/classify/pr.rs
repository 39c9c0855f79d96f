use alloc::vec::Vec;

use super::{ClassifyError, PeriodClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// Recall, or 0 without positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// False-positive rate, or 0 without negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    /// Precision; 1 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            ratio(self.tp, self.tp + self.fp)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Confusion counts when every period with `score >= threshold` is called
/// Degraded.
pub fn confusion(scores: &[f64], labels: &[PeriodClass], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_degraded()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Scores at or above this level are called Degraded. The leading
    /// anchor uses `+inf`.
    pub threshold: f64,
    pub counts: Confusion,
}

/// Precision-recall pairs ordered by recall, starting from the
/// `(0, 1)` anchor at an infinite threshold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// Sweeps the distinct scores from highest to lowest. Tied scores form a
/// single level.
pub fn pr_curve(scores: &[f64], labels: &[PeriodClass]) -> Result<PrCurve, ClassifyError> {
    if scores.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch);
    }
    let pos = labels.iter().filter(|l| l.is_degraded()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ClassifyError::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClassifyError::InvalidRange("score is NaN"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(scores.len() + 1);
    let mut counts = Confusion {
        tp: 0,
        fp: 0,
        fn_: pos,
        tn: neg,
    };
    points.push(PrPoint {
        recall: 0.0,
        precision: 1.0,
        threshold: f64::INFINITY,
        counts,
    });
    let mut i = 0;
    while i < order.len() {
        let level = scores[order[i]];
        while i < order.len() && scores[order[i]] == level {
            if labels[order[i]].is_degraded() {
                counts.tp += 1;
                counts.fn_ -= 1;
            } else {
                counts.fp += 1;
                counts.tn -= 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            recall: counts.tpr(),
            precision: counts.precision(),
            threshold: level,
            counts,
        });
    }
    Ok(PrCurve { points })
}

/// Trapezoid area under the curve, in order of the points.
pub fn auprc(curve: &PrCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].recall - w[0].recall) * (w[1].precision + w[0].precision) / 2.0)
        .sum()
}

/// The most sensitive threshold whose false-positive rate stays within
/// `max_fpr`: candidates are the distinct scores and `+inf`, scanned from
/// high to low, and the last feasible one is returned.
pub fn select_threshold_for_fpr(
    scores: &[f64],
    labels: &[PeriodClass],
    max_fpr: f64,
) -> Result<f64, ClassifyError> {
    if scores.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch);
    }
    if max_fpr < 0.0 {
        return Err(ClassifyError::NoFeasibleThreshold);
    }
    if !(max_fpr <= 1.0) {
        return Err(ClassifyError::InvalidRange("max_fpr must lie in [0, 1]"));
    }
    let neg = labels.iter().filter(|l| !l.is_degraded()).count();
    if neg == 0 {
        return Err(ClassifyError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut best = f64::INFINITY;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let level = scores[order[i]];
        while i < order.len() && scores[order[i]] == level {
            if !labels[order[i]].is_degraded() {
                fp += 1;
            }
            i += 1;
        }
        // FPR only grows as the threshold drops, so stop at the first breach.
        if fp as f64 > max_fpr * neg as f64 + 1e-12 {
            break;
        }
        best = level;
    }
    Ok(best)
}
