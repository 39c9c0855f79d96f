//! Period classification and availability metrics.
//!
//! A period is Good when at least 99% of its stable-core probes arrive
//! within the latency budget `l_t`. Degraded is the positive class
//! throughout: precision, recall and FPR are all stated with respect to it.

mod eval;
mod pr;

use alloc::vec::Vec;

pub use eval::{
    dsa_points, evaluate, parse_models, period_data, quantile_mse_eval, DsaPoint, EvalConfig, EvalReport, ModelReport, ModelSpec, PeriodData,
    WindowResult,
};
pub use pr::{auprc, confusion, pr_curve, select_threshold_for_fpr, Confusion, PrCurve, PrPoint};

use crate::stats::{exceedance_prob, FittedModel};

/// Fraction of probes that must meet the budget for a Good period.
pub const MEET_TARGET: f64 = 0.99;
/// Smallest stable core [`label_period`] accepts.
pub const MIN_LABEL_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("latency budget must be positive")]
    InvalidBudget,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("scores and labels differ in length")]
    LengthMismatch,
    #[error("no threshold satisfies the false-positive cap")]
    NoFeasibleThreshold,
    #[error("no periods")]
    EmptyInput,
    #[error("argument out of range: {0}")]
    InvalidRange(&'static str),
    #[error("unknown model '{0}'")]
    UnknownModel(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PeriodClass {
    Good,
    Degraded,
}

impl PeriodClass {
    pub fn is_degraded(self) -> bool {
        self == PeriodClass::Degraded
    }

    pub fn name(self) -> &'static str {
        match self {
            PeriodClass::Good => "good",
            PeriodClass::Degraded => "degraded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodLabel {
    pub p: usize,
    pub label: PeriodClass,
    pub meet_fraction: f64,
}

/// Labels one period from its stable core. Lost probes (`None`) count as
/// misses.
pub fn label_period(p: usize, core: &[Option<f64>], lt_ms: f64) -> Result<PeriodLabel, ClassifyError> {
    if !(lt_ms > 0.0) {
        return Err(ClassifyError::InvalidBudget);
    }
    if core.len() < MIN_LABEL_SAMPLES {
        return Err(ClassifyError::TooFew {
            need: MIN_LABEL_SAMPLES,
            got: core.len(),
        });
    }
    let met = core.iter().filter(|v| matches!(v, Some(x) if *x <= lt_ms)).count();
    let meet_fraction = met as f64 / core.len() as f64;
    // Compare counts, not the rounded fraction: 7425 of 7500 is exactly 99%.
    let good = met as f64 >= MEET_TARGET * core.len() as f64 - 1e-9;
    Ok(PeriodLabel {
        p,
        label: if good { PeriodClass::Good } else { PeriodClass::Degraded },
        meet_fraction,
    })
}

/// Model-estimated `P(L > l_t)`; larger means more Degraded-like.
pub fn score_period(model: &FittedModel, lt_ms: f64) -> f64 {
    exceedance_prob(model, lt_ms)
}

/// Share of Good periods.
pub fn service_availability(labels: &[PeriodClass]) -> Result<f64, ClassifyError> {
    if labels.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let good = labels.iter().filter(|l| !l.is_degraded()).count();
    Ok(good as f64 / labels.len() as f64)
}

/// Service availability discounted by the sampling overhead and the
/// detection rate: `sa * (T - w) / T * tpr`.
pub fn dsa(sa: f64, sampling_ms: f64, t_ms: f64, tpr: f64) -> Result<f64, ClassifyError> {
    if !(t_ms > 0.0) {
        return Err(ClassifyError::InvalidRange("period length must be positive"));
    }
    if !(0.0..=t_ms).contains(&sampling_ms) {
        return Err(ClassifyError::InvalidRange("sampling time outside [0, T]"));
    }
    if !(0.0..=1.0).contains(&sa) || !(0.0..=1.0).contains(&tpr) {
        return Err(ClassifyError::InvalidRange("sa and tpr must lie in [0, 1]"));
    }
    Ok(sa * ((t_ms - sampling_ms) / t_ms) * tpr)
}

pub(crate) fn labels_of(labels: &[PeriodLabel]) -> Vec<PeriodClass> {
    labels.iter().map(|l| l.label).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{fit_empirical, Gaussian, Uniform};

    fn core_with_misses(n: usize, above: usize) -> Vec<Option<f64>> {
        (0..n).map(|i| Some(if i < above { 60.0 } else { 40.0 })).collect()
    }

    #[test]
    fn label_examples() {
        let l = label_period(0, &core_with_misses(7500, 74), 50.0).unwrap();
        assert_eq!(l.label, PeriodClass::Good);
        assert!((l.meet_fraction - 0.990133).abs() < 1e-6);
        let l = label_period(0, &core_with_misses(7500, 76), 50.0).unwrap();
        assert_eq!(l.label, PeriodClass::Degraded);
        let l = label_period(0, &core_with_misses(7500, 75), 50.0).unwrap();
        assert_eq!(l.label, PeriodClass::Good);
        let l = label_period(0, &core_with_misses(200, 0), 50.0).unwrap();
        assert_eq!((l.label, l.meet_fraction), (PeriodClass::Good, 1.0));
    }

    #[test]
    fn lost_probes_are_misses() {
        let mut core = core_with_misses(1000, 0);
        for v in core.iter_mut().take(11) {
            *v = None;
        }
        assert_eq!(label_period(3, &core, 50.0).unwrap().label, PeriodClass::Degraded);
    }

    #[test]
    fn label_errors() {
        assert_eq!(
            label_period(0, &core_with_misses(99, 0), 50.0),
            Err(ClassifyError::TooFew { need: 100, got: 99 })
        );
        assert_eq!(label_period(0, &core_with_misses(100, 0), 0.0), Err(ClassifyError::InvalidBudget));
    }

    #[test]
    fn score_examples() {
        let g = FittedModel::Gaussian(Gaussian { mu: 40.0, sigma: 5.0 });
        assert!((score_period(&g, 50.0) - 0.022750131948179).abs() < 1e-9);
        let u = FittedModel::Uniform(Uniform { a: 40.0, b: 40.0 });
        assert_eq!(score_period(&u, 50.0), 0.0);
        let e = FittedModel::Empirical(fit_empirical(&[51.0, 60.0, 70.0]).unwrap().model);
        assert_eq!(score_period(&e, 50.0), 1.0);
    }

    #[test]
    fn availability_examples() {
        use PeriodClass::*;
        assert_eq!(service_availability(&[Good, Good, Degraded, Degraded, Degraded]).unwrap(), 0.4);
        assert_eq!(service_availability(&[Good; 4]).unwrap(), 1.0);
        assert_eq!(service_availability(&[]), Err(ClassifyError::EmptyInput));
    }

    #[test]
    fn dsa_examples() {
        assert_eq!(dsa(0.396, 0.0, 15_000.0, 1.0).unwrap(), 0.396);
        assert_eq!(dsa(0.7, 15_000.0, 15_000.0, 0.8).unwrap(), 0.0);
        assert!((dsa(0.4, 1500.0, 15_000.0, 0.9).unwrap() - 0.324).abs() < 1e-12);
        assert!(dsa(0.4, 16_000.0, 15_000.0, 0.9).is_err());
        assert!(dsa(1.2, 0.0, 15_000.0, 0.9).is_err());
    }
}
