//! The (model x window x period) evaluation grid behind the MSE, AUPRC and
//! DSA curves.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{
    auprc, confusion, dsa, label_period, labels_of, pr_curve, score_period, select_threshold_for_fpr,
    service_availability, ClassifyError, PeriodClass, PeriodLabel,
};
use crate::exec::par_map;
use crate::segment::{stable_core, CoreWindow, Segmentation};
use crate::stats::{
    empirical_quantile, fit_empirical, fit_gaussian, fit_gmm, fit_gpd_topk, fit_uniform, quantile, Fit, FitConfig,
    FitError, FittedModel,
};
use crate::trace::LatencySeries;

/// Model family plus its structural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    Uniform,
    Gaussian,
    Gmm(usize),
    Empirical,
    Gpd,
}

impl ModelSpec {
    pub fn fit(&self, samples: &[f64], config: &FitConfig, seed: u64) -> Result<Fit<FittedModel>, FitError> {
        match *self {
            ModelSpec::Uniform => fit_uniform(samples).map(Fit::erase),
            ModelSpec::Gaussian => fit_gaussian(samples).map(Fit::erase),
            ModelSpec::Gmm(k) => fit_gmm(samples, k, config, seed).map(Fit::erase),
            ModelSpec::Empirical => fit_empirical(samples).map(Fit::erase),
            ModelSpec::Gpd => fit_gpd_topk(samples, config.gpd_k).map(Fit::erase),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Uniform => f.write_str("uniform"),
            ModelSpec::Gaussian => f.write_str("gaussian"),
            ModelSpec::Gmm(k) => write!(f, "gmm{k}"),
            ModelSpec::Empirical => f.write_str("empirical"),
            ModelSpec::Gpd => f.write_str("gpd"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "uniform" => Ok(ModelSpec::Uniform),
            "gaussian" => Ok(ModelSpec::Gaussian),
            "empirical" => Ok(ModelSpec::Empirical),
            "gpd" | "evt" => Ok(ModelSpec::Gpd),
            "gmm" => Ok(ModelSpec::Gmm(2)),
            other => other
                .strip_prefix("gmm")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .map(ModelSpec::Gmm)
                .ok_or_else(|| ClassifyError::UnknownModel(s.to_string())),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = alloc::string::String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalConfig {
    pub lt_ms: f64,
    /// Quantile level predicted for the MSE curve.
    pub q: f64,
    /// Sampling windows, measured from the start of the stable core.
    pub windows_ms: Vec<f64>,
    pub models: Vec<ModelSpec>,
    pub fit: FitConfig,
    pub seed: u64,
    pub max_fprs: Vec<f64>,
    /// Leading share of periods used to calibrate DSA thresholds.
    pub calibration_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lt_ms: 50.0,
            q: 0.99,
            windows_ms: (1..=50).map(|i| i as f64 * 100.0).collect(),
            models: alloc::vec![
                ModelSpec::Gaussian,
                ModelSpec::Gmm(2),
                ModelSpec::Gmm(3),
                ModelSpec::Empirical,
                ModelSpec::Gpd,
                ModelSpec::Uniform,
            ],
            fit: FitConfig::default(),
            seed: 0,
            max_fprs: alloc::vec![0.01, 0.05, 0.10],
            calibration_fraction: 0.5,
        }
    }
}

/// One included period ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodData {
    pub label: PeriodLabel,
    pub core: Vec<Option<f64>>,
    /// Nearest-rank `q`-quantile of the whole stable core.
    pub realized_q: Option<f64>,
}

/// Stable cores, labels and realized quantiles of the non-excluded periods.
pub fn period_data(
    series: &LatencySeries,
    segmentation: &Segmentation,
    window: &CoreWindow,
    lt_ms: f64,
    q: f64,
) -> Result<Vec<PeriodData>, ClassifyError> {
    let slices: Vec<_> = segmentation.included().copied().collect();
    par_map(&slices, |slice| {
        let core = stable_core(series, slice, window);
        let label = label_period(slice.p, &core, lt_ms)?;
        let present: Vec<f64> = core.iter().flatten().copied().collect();
        let realized_q = empirical_quantile(&present, q).ok();
        Ok(PeriodData { label, core, realized_q })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DsaPoint {
    pub sampling_ms: f64,
    pub max_fpr: f64,
    pub threshold: f64,
    /// Recall on the held-out periods.
    pub tpr: f64,
    /// False-positive rate realised on the held-out periods.
    pub fpr: f64,
    pub dsa: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowResult {
    pub w_ms: f64,
    pub bins: usize,
    pub mse_ms2: Option<f64>,
    /// Periods contributing to the MSE.
    pub n_fitted: usize,
    /// Periods whose fit failed outright.
    pub n_skipped: usize,
    pub predictions: Vec<Option<f64>>,
    pub scores: Vec<Option<f64>>,
    pub auprc: Option<f64>,
    pub dsa: Vec<DsaPoint>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelReport {
    pub model: ModelSpec,
    pub windows: Vec<WindowResult>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub lt_ms: f64,
    pub q: f64,
    pub period_ms: f64,
    pub labels: Vec<PeriodLabel>,
    /// Availability over every evaluated period.
    pub sa: f64,
    /// Availability over the held-out periods, the one DSA discounts.
    pub sa_holdout: f64,
    pub n_calibration: usize,
    pub per_model: Vec<ModelReport>,
}

impl EvalReport {
    pub fn model(&self, spec: ModelSpec) -> Option<&ModelReport> {
        self.per_model.iter().find(|m| m.model == spec)
    }
}

struct PeriodOutcome {
    prediction: Option<f64>,
    score: Option<f64>,
}

fn window_bins(w_ms: f64, dt_ms: f64, core_len: usize) -> Result<usize, ClassifyError> {
    let bins = libm::round(w_ms / dt_ms) as usize;
    if !(w_ms > 0.0) || bins == 0 || bins > core_len {
        return Err(ClassifyError::InvalidRange("sampling window outside the stable core"));
    }
    Ok(bins)
}

fn fit_seed(base: u64, model: usize, window: usize, p: usize) -> u64 {
    base ^ ((model as u64) << 48) ^ ((window as u64) << 32) ^ p as u64
}

fn run_window(
    periods: &[PeriodData],
    spec: ModelSpec,
    bins: usize,
    config: &EvalConfig,
    seed_of: impl Fn(usize) -> u64 + Sync + Send,
) -> Vec<PeriodOutcome> {
    par_map(periods, |pd| {
        let samples: Vec<f64> = pd.core[..bins].iter().flatten().copied().collect();
        match spec.fit(&samples, &config.fit, seed_of(pd.label.p)) {
            Ok(fit) => PeriodOutcome {
                prediction: quantile(&fit.model, config.q).ok(),
                score: Some(score_period(&fit.model, config.lt_ms)),
            },
            Err(_) => PeriodOutcome {
                prediction: None,
                score: None,
            },
        }
    })
}

fn mse(periods: &[PeriodData], predictions: &[Option<f64>]) -> (Option<f64>, usize) {
    let mut total = 0.0;
    let mut n = 0;
    for (pd, pred) in periods.iter().zip(predictions) {
        if let (Some(truth), Some(pred)) = (pd.realized_q, pred) {
            total += (pred - truth) * (pred - truth);
            n += 1;
        }
    }
    ((n > 0).then(|| total / n as f64), n)
}

fn scored(scores: &[Option<f64>], labels: &[PeriodClass]) -> (Vec<f64>, Vec<PeriodClass>) {
    scores
        .iter()
        .zip(labels)
        .filter_map(|(s, l)| s.map(|s| (s, *l)))
        .unzip()
}

/// FPR-calibrated DSA points for one window. Thresholds come from the
/// first `n_cal` periods, recall and availability from the rest. Caps with
/// no feasible threshold or a held-out set without Degraded periods yield
/// no point.
pub fn dsa_points(
    scores: &[Option<f64>],
    classes: &[PeriodClass],
    n_cal: usize,
    w_ms: f64,
    period_ms: f64,
    max_fprs: &[f64],
) -> Result<Vec<DsaPoint>, ClassifyError> {
    if scores.len() != classes.len() {
        return Err(ClassifyError::LengthMismatch);
    }
    if n_cal >= classes.len() {
        return Err(ClassifyError::InvalidRange("calibration split leaves no held-out periods"));
    }
    let sa_holdout = service_availability(&classes[n_cal..])?;
    let (s_cal, l_cal) = scored(&scores[..n_cal], &classes[..n_cal]);
    let (s_hold, l_hold) = scored(&scores[n_cal..], &classes[n_cal..]);
    let mut points = Vec::new();
    for &max_fpr in max_fprs {
        let Ok(threshold) = select_threshold_for_fpr(&s_cal, &l_cal, max_fpr) else {
            continue;
        };
        let c = confusion(&s_hold, &l_hold, threshold);
        if c.tp + c.fn_ == 0 {
            continue;
        }
        let tpr = c.tpr();
        points.push(DsaPoint {
            sampling_ms: w_ms,
            max_fpr,
            threshold,
            tpr,
            fpr: c.fpr(),
            dsa: dsa(sa_holdout, w_ms, period_ms, tpr)?,
        });
    }
    Ok(points)
}

/// MSE of the predicted `q`-quantile against each period's realized one,
/// per window. Returns `(w_ms, mse, n_fitted)`; periods that fail to fit or
/// whose model cannot produce the quantile are skipped.
pub fn quantile_mse_eval(
    periods: &[PeriodData],
    spec: ModelSpec,
    windows_ms: &[f64],
    dt_ms: f64,
    config: &EvalConfig,
) -> Result<Vec<(f64, Option<f64>, usize)>, ClassifyError> {
    if periods.len() < 10 {
        return Err(ClassifyError::TooFew {
            need: 10,
            got: periods.len(),
        });
    }
    let core_len = periods[0].core.len();
    windows_ms
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let bins = window_bins(w, dt_ms, core_len)?;
            let out = run_window(periods, spec, bins, config, |p| fit_seed(config.seed, 0, wi, p));
            let preds: Vec<_> = out.iter().map(|o| o.prediction).collect();
            let (m, n) = mse(periods, &preds);
            Ok((w, m, n))
        })
        .collect()
}

/// Runs every model over every window: quantile predictions and their MSE,
/// exceedance scores and AUPRC, and FPR-calibrated DSA points.
///
/// DSA thresholds are calibrated on the leading `calibration_fraction` of
/// the periods in time order and scored on the rest.
pub fn evaluate(
    periods: &[PeriodData],
    dt_ms: f64,
    period_ms: f64,
    config: &EvalConfig,
) -> Result<EvalReport, ClassifyError> {
    if periods.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    if !(config.q > 0.0 && config.q < 1.0) {
        return Err(ClassifyError::InvalidRange("q must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&config.calibration_fraction) {
        return Err(ClassifyError::InvalidRange("calibration fraction must lie in [0, 1)"));
    }
    let core_len = periods[0].core.len();
    if periods.iter().any(|p| p.core.len() != core_len) {
        return Err(ClassifyError::InvalidRange("stable cores differ in length"));
    }
    let bins: Vec<usize> = config
        .windows_ms
        .iter()
        .map(|&w| window_bins(w, dt_ms, core_len))
        .collect::<Result<_, _>>()?;
    for &w in &config.windows_ms {
        if w > period_ms {
            return Err(ClassifyError::InvalidRange("sampling window longer than the period"));
        }
    }

    let labels: Vec<PeriodLabel> = periods.iter().map(|p| p.label).collect();
    let classes = labels_of(&labels);
    let sa = service_availability(&classes)?;
    let n_cal = libm::floor(periods.len() as f64 * config.calibration_fraction) as usize;
    let sa_holdout = service_availability(&classes[n_cal..])?;

    let mut per_model = Vec::with_capacity(config.models.len());
    for (mi, &spec) in config.models.iter().enumerate() {
        let mut windows = Vec::with_capacity(bins.len());
        for (wi, (&w_ms, &b)) in config.windows_ms.iter().zip(&bins).enumerate() {
            let out = run_window(periods, spec, b, config, |p| fit_seed(config.seed, mi, wi, p));
            let predictions: Vec<_> = out.iter().map(|o| o.prediction).collect();
            let scores: Vec<_> = out.iter().map(|o| o.score).collect();
            let n_skipped = scores.iter().filter(|s| s.is_none()).count();
            let (mse_ms2, n_fitted) = mse(periods, &predictions);

            let (s_all, l_all) = scored(&scores, &classes);
            let auprc = pr_curve(&s_all, &l_all).ok().map(|c| auprc(&c));

            let dsa_points = dsa_points(&scores, &classes, n_cal, w_ms, period_ms, &config.max_fprs)?;
            windows.push(WindowResult {
                w_ms,
                bins: b,
                mse_ms2,
                n_fitted,
                n_skipped,
                predictions,
                scores,
                auprc,
                dsa: dsa_points,
            });
        }
        per_model.push(ModelReport { model: spec, windows });
    }

    Ok(EvalReport {
        lt_ms: config.lt_ms,
        q: config.q,
        period_ms,
        labels,
        sa,
        sa_holdout,
        n_calibration: n_cal,
        per_model,
    })
}

/// Comma-separated model list, e.g. `gaussian,gmm3,gpd`.
pub fn parse_models(list: &str) -> Result<Vec<ModelSpec>, ClassifyError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(ClassifyError::UnknownModel(format!("{list:?}")))
            } else {
                Ok(v)
            }
        })
}
