//! Intra-period latency distribution models.
//!
//! Every fitted model answers the same three questions: the CDF, the
//! exceedance probability `P(L > x)` and the `q`-quantile. [`FittedModel`]
//! is the tagged union the rest of the pipeline passes around.

mod empirical;
mod gaussian;
mod gmm;
mod gpd;
pub mod normal;
mod uniform;

use alloc::vec::Vec;

pub use empirical::{empirical_quantile, fit_empirical, Empirical};
pub use gaussian::{fit_gaussian, Gaussian};
pub use gmm::{fit_gmm, fit_gmm_with_history, EmHistory, Gmm, GmmComponent};
pub use gpd::{fit_gpd_topk, GpdTail, GPD_XI_MAX, GPD_XI_MIN};
pub use uniform::{fit_uniform, Uniform};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("all top-k samples tie with the threshold")]
    AllTiesAtThreshold,
    #[error("samples contain a non-finite value")]
    NonFinite,
    #[error("component count must be at least 1")]
    NoComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuantileError {
    #[error("quantile level {0} is outside (0, 1)")]
    InvalidQ(f64),
    #[error("quantile level {q} is below the tail region (needs q > {min_q})")]
    OutOfTailRegion { q: f64, min_q: f64 },
}

/// Soft conditions that still produce a usable model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitWarning {
    /// All samples equal; the model is a point mass.
    DegenerateSupport,
    /// EM hit its iteration cap; the best parameters so far are returned.
    NoConvergence,
    /// GPD likelihood search failed and moments were used instead.
    MomentFallback,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub gmm_max_iter: usize,
    /// Relative log-likelihood change that ends EM.
    pub gmm_tol: f64,
    pub gmm_restarts: usize,
    pub gmm_min_sigma: f64,
    pub gpd_k: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            gmm_max_iter: 200,
            gmm_tol: 1e-6,
            gmm_restarts: 3,
            gmm_min_sigma: 1e-3,
            gpd_k: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitMeta {
    pub n: usize,
    /// Log-likelihood of the fit; `None` where it is undefined.
    pub loglik: Option<f64>,
    pub converged: bool,
    pub seed: Option<u64>,
    pub warning: Option<FitWarning>,
}

impl FitMeta {
    pub(crate) fn closed_form(n: usize, loglik: Option<f64>) -> Self {
        Self {
            n,
            loglik,
            converged: true,
            seed: None,
            warning: None,
        }
    }
}

/// A model plus how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit<M> {
    pub model: M,
    pub meta: FitMeta,
}

impl<M: Into<FittedModel>> Fit<M> {
    pub fn erase(self) -> Fit<FittedModel> {
        Fit {
            model: self.model.into(),
            meta: self.meta,
        }
    }
}

/// Common quantile/CDF contract.
pub trait LatencyModel {
    fn cdf(&self, x: f64) -> f64;

    fn exceedance(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError>;
}

pub(crate) fn check_q(q: f64) -> Result<(), QuantileError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(QuantileError::InvalidQ(q))
    }
}

pub(crate) fn check_samples(samples: &[f64], need: usize) -> Result<(), FitError> {
    if samples.len() < need {
        return Err(FitError::TooFew {
            need,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

pub(crate) fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum FittedModel {
    Uniform(Uniform),
    Gaussian(Gaussian),
    Gmm(Gmm),
    Empirical(Empirical),
    #[cfg_attr(feature = "serde", serde(rename = "gpd"))]
    GpdTail(GpdTail),
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedModel::Uniform(_) => "uniform",
            FittedModel::Gaussian(_) => "gaussian",
            FittedModel::Gmm(_) => "gmm",
            FittedModel::Empirical(_) => "empirical",
            FittedModel::GpdTail(_) => "gpd",
        }
    }

    fn inner(&self) -> &dyn LatencyModel {
        match self {
            FittedModel::Uniform(m) => m,
            FittedModel::Gaussian(m) => m,
            FittedModel::Gmm(m) => m,
            FittedModel::Empirical(m) => m,
            FittedModel::GpdTail(m) => m,
        }
    }
}

impl LatencyModel for FittedModel {
    fn cdf(&self, x: f64) -> f64 {
        self.inner().cdf(x)
    }

    fn exceedance(&self, x: f64) -> f64 {
        self.inner().exceedance(x)
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        self.inner().quantile(q)
    }
}

macro_rules! into_fitted {
    ($($ty:ident => $variant:ident),*) => {
        $(impl From<$ty> for FittedModel {
            fn from(m: $ty) -> Self {
                FittedModel::$variant(m)
            }
        })*
    };
}

into_fitted!(Uniform => Uniform, Gaussian => Gaussian, Gmm => Gmm, Empirical => Empirical, GpdTail => GpdTail);

/// `q`-quantile of `model`. Thin wrapper over [`LatencyModel::quantile`].
pub fn quantile(model: &FittedModel, q: f64) -> Result<f64, QuantileError> {
    model.quantile(q)
}

/// `P(L > x)` under `model`, clamped to `[0, 1]`.
pub fn exceedance_prob(model: &FittedModel, x: f64) -> f64 {
    model.exceedance(x).clamp(0.0, 1.0)
}
