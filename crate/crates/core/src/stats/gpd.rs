//! Peaks-over-threshold tail model with a generalized Pareto excess law.
//!
//! The threshold is the `(k+1)`-th largest sample, so exactly `k` exceedances
//! are fitted in every window. The samples at or below the threshold are kept
//! so that exceedance probabilities below `u` stay self-contained.

use alloc::vec::Vec;

use super::{check_q, check_samples, sorted_copy, Fit, FitError, FitMeta, FitWarning, LatencyModel, QuantileError};

pub const GPD_XI_MIN: f64 = -0.5;
pub const GPD_XI_MAX: f64 = 2.0;

/// Below this |xi| the exponential limit formulas are used.
const XI_ZERO: f64 = 1e-6;
const MIN_K: usize = 10;
const GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GpdTail {
    /// Threshold, ms.
    pub u: f64,
    /// Excess scale, ms.
    pub sigma: f64,
    pub xi: f64,
    /// Number of exceedances.
    pub k: usize,
    /// Window size the tail fraction `k / n` refers to.
    pub n: usize,
    /// The `n - k` samples not above the threshold, ascending.
    pub body: Vec<f64>,
}

impl GpdTail {
    pub fn tail_fraction(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// The peaks-over-threshold quantile formula without the tail-region
    /// check. Below the threshold it extrapolates the excess law downwards,
    /// which is exact for memoryless and Pareto-type parents.
    pub fn pot_quantile(&self, q: f64) -> f64 {
        let ratio = (self.n as f64 / self.k as f64) * (1.0 - q);
        if libm::fabs(self.xi) < XI_ZERO {
            self.u - self.sigma * libm::log(ratio)
        } else {
            self.u + (self.sigma / self.xi) * (libm::pow(ratio, -self.xi) - 1.0)
        }
    }

    /// `P(L > x)` from the excess law, valid for `x >= u`.
    fn tail_exceedance(&self, x: f64) -> f64 {
        let y = x - self.u;
        let frac = self.tail_fraction();
        if libm::fabs(self.xi) < XI_ZERO {
            return frac * libm::exp(-y / self.sigma);
        }
        let t = 1.0 + self.xi * y / self.sigma;
        if t <= 0.0 {
            0.0
        } else {
            frac * libm::pow(t, -1.0 / self.xi)
        }
    }
}

impl LatencyModel for GpdTail {
    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.exceedance(x)
    }

    fn exceedance(&self, x: f64) -> f64 {
        if x >= self.u {
            self.tail_exceedance(x)
        } else {
            let above_in_body = self.body.len() - self.body.partition_point(|&v| v <= x);
            (above_in_body + self.k) as f64 / self.n as f64
        }
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        check_q(q)?;
        let min_q = 1.0 - self.tail_fraction();
        if q <= min_q {
            return Err(QuantileError::OutOfTailRegion { q, min_q });
        }
        Ok(self.pot_quantile(q))
    }
}

/// GPD log-likelihood of excesses `y` (all `>= 0`).
fn loglik(y: &[f64], sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let k = y.len() as f64;
    let ln_sigma = libm::log(sigma);
    if libm::fabs(xi) < 1e-12 {
        return -k * ln_sigma - y.iter().sum::<f64>() / sigma;
    }
    let mut acc = 0.0;
    for &v in y {
        let t = 1.0 + xi * v / sigma;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += libm::log(t);
    }
    -k * ln_sigma - (1.0 + 1.0 / xi) * acc
}

/// Scale MLE for a fixed shape. Solves `sum y/(sigma + xi y) = k/(1+xi)`,
/// whose left side is decreasing in `sigma`.
fn profile_sigma(y: &[f64], xi: f64) -> Option<f64> {
    let k = y.len() as f64;
    let target = k / (1.0 + xi);
    let y_max = y.iter().copied().fold(0.0, f64::max);
    let score = |sigma: f64| -> f64 { y.iter().map(|&v| v / (sigma + xi * v)).sum::<f64>() - target };

    let floor = if xi < 0.0 { -xi * y_max } else { 0.0 };
    let mut lo = floor + 1e-12 * y_max.max(1e-300);
    if score(lo) <= 0.0 {
        // Likelihood keeps rising towards the boundary: no interior maximum.
        return None;
    }
    let mut hi = (floor + y_max).max(1e-300);
    let mut grow = 0;
    while score(hi) > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return None;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

fn profile(y: &[f64], xi: f64) -> (f64, f64) {
    match profile_sigma(y, xi) {
        Some(sigma) => (loglik(y, sigma, xi), sigma),
        None => (f64::NEG_INFINITY, f64::NAN),
    }
}

/// Shape and scale by profile likelihood over `[GPD_XI_MIN, GPD_XI_MAX]`:
/// a grid scan followed by golden-section refinement around the best point.
fn mle(y: &[f64]) -> Option<(f64, f64)> {
    let step = (GPD_XI_MAX - GPD_XI_MIN) / (GRID_POINTS - 1) as f64;
    let mut best_i = None;
    let mut best_ll = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let xi = GPD_XI_MIN + step * i as f64;
        let (ll, _) = profile(y, xi);
        if ll > best_ll {
            best_ll = ll;
            best_i = Some(i);
        }
    }
    let i = best_i?;
    let mut a = GPD_XI_MIN + step * i.saturating_sub(1) as f64;
    let mut b = (GPD_XI_MIN + step * (i + 1) as f64).min(GPD_XI_MAX);
    let ratio = 0.618_033_988_749_894_8;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (profile(y, c).0, profile(y, d).0);
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = profile(y, c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = profile(y, d).0;
        }
        if b - a < 1e-9 {
            break;
        }
    }
    let xi_refined = 0.5 * (a + b);
    let (ll_refined, sigma_refined) = profile(y, xi_refined);
    let xi_grid = GPD_XI_MIN + step * i as f64;
    let (xi, ll, sigma) = if ll_refined >= best_ll {
        (xi_refined, ll_refined, sigma_refined)
    } else {
        (xi_grid, best_ll, profile(y, xi_grid).1)
    };
    (ll.is_finite() && sigma.is_finite() && sigma > 0.0).then_some((sigma, xi))
}

/// Probability-weighted moments (Hosking and Wallis), shape clamped to the
/// search interval.
fn pwm(y_sorted: &[f64]) -> (f64, f64) {
    let k = y_sorted.len() as f64;
    let a0 = y_sorted.iter().sum::<f64>() / k;
    let a1 = y_sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (1.0 - (i as f64 + 1.0 - 0.35) / k) * v)
        .sum::<f64>()
        / k;
    let denom = a0 - 2.0 * a1;
    let xi = (2.0 - a0 / denom).clamp(GPD_XI_MIN, GPD_XI_MAX);
    let sigma = 2.0 * a0 * a1 / denom;
    if sigma.is_finite() && sigma > 0.0 {
        (sigma, xi)
    } else {
        (a0.max(1e-12), 0.0)
    }
}

/// Fits the top-`k` exceedances of `samples`.
pub fn fit_gpd_topk(samples: &[f64], k: usize) -> Result<Fit<GpdTail>, FitError> {
    let n = samples.len();
    if k < MIN_K {
        return Err(FitError::TooFew { need: MIN_K, got: k });
    }
    check_samples(samples, k + 1)?;
    let mut sorted = sorted_copy(samples);
    let u = sorted[n - k - 1];
    let y: Vec<f64> = sorted[n - k..].iter().map(|&x| x - u).collect();
    if y.iter().all(|&v| v == 0.0) {
        return Err(FitError::AllTiesAtThreshold);
    }
    let (sigma, xi, warning) = match mle(&y) {
        Some((sigma, xi)) => (sigma, xi, None),
        None => {
            let (sigma, xi) = pwm(&y);
            (sigma, xi, Some(FitWarning::MomentFallback))
        }
    };
    let ll = loglik(&y, sigma, xi);
    sorted.truncate(n - k);
    let model = GpdTail {
        u,
        sigma,
        xi,
        k,
        n,
        body: sorted,
    };
    let meta = FitMeta {
        n,
        loglik: ll.is_finite().then_some(ll),
        converged: warning.is_none(),
        seed: None,
        warning,
    };
    Ok(Fit { model, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tail(u: f64, sigma: f64, xi: f64) -> GpdTail {
        GpdTail {
            u,
            sigma,
            xi,
            k: 25,
            n: 2500,
            body: vec![u; 2475],
        }
    }

    #[test]
    fn exponential_branch_at_unit_ratio() {
        // q = 1 - k/n sits on the threshold itself.
        let m = tail(50.0, 5.0, 0.0);
        assert!((m.pot_quantile(0.99) - 50.0).abs() < 1e-12);
        let m = tail(50.0, 5.0, 1e-8);
        assert!((m.pot_quantile(0.99) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn small_shape_converges_to_exponential_formula() {
        for q in [0.991, 0.995, 0.999, 0.9999] {
            let branch = tail(50.0, 5.0, 0.0).quantile(q).unwrap();
            let general = tail(50.0, 5.0, 1.5e-6).quantile(q).unwrap();
            assert!((branch - general).abs() < 1e-4, "q={q}");
        }
    }

    #[test]
    fn tail_region_enforced() {
        let m = tail(50.0, 5.0, 0.1);
        assert!(matches!(
            m.quantile(0.98),
            Err(QuantileError::OutOfTailRegion { .. })
        ));
        assert!(m.quantile(0.995).is_ok());
    }

    #[test]
    fn quantile_inverts_exceedance() {
        for xi in [-0.3, 0.0, 0.4, 1.5] {
            let m = tail(50.0, 5.0, xi);
            for q in [0.9905, 0.995, 0.999] {
                let x = m.quantile(q).unwrap();
                assert!((m.exceedance(x) - (1.0 - q)).abs() < 1e-9, "xi={xi} q={q}");
            }
        }
    }

    #[test]
    fn fit_rejects_small_windows() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(fit_gpd_topk(&xs, 25), Err(FitError::TooFew { .. })));
        assert!(matches!(fit_gpd_topk(&xs, 5), Err(FitError::TooFew { .. })));
    }

    #[test]
    fn ties_at_threshold() {
        let mut xs = vec![1.0; 100];
        xs.extend(vec![9.0; 30]);
        assert_eq!(fit_gpd_topk(&xs, 25), Err(FitError::AllTiesAtThreshold));
    }

    #[test]
    fn threshold_and_body_layout() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let f = fit_gpd_topk(&xs, 25).unwrap().model;
        assert_eq!(f.u, 74.0);
        assert_eq!(f.body.len(), 75);
        assert_eq!(f.n, 100);
        assert_eq!(f.exceedance(-1.0), 1.0);
        assert!((f.exceedance(73.5) - 26.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn profile_score_root_is_stationary() {
        // The profiled scale must zero the partial derivative in sigma.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..25).map(|_| -5.0 * libm::log(1.0 - rng.random::<f64>())).collect();
        for xi in [-0.4, 0.0, 0.3, 1.0] {
            let s = profile_sigma(&y, xi).unwrap();
            let h = 1e-6 * s;
            let d = (loglik(&y, s + h, xi) - loglik(&y, s - h, xi)) / (2.0 * h);
            assert!(d.abs() < 1e-4, "xi={xi} d={d}");
        }
    }

    #[test]
    fn pwm_recovers_exponential_shape() {
        let y: Vec<f64> = (1..=2000)
            .map(|i| -libm::log(1.0 - (i as f64 - 0.5) / 2000.0))
            .collect();
        let (sigma, xi) = pwm(&y);
        assert!(xi.abs() < 0.05, "{xi}");
        assert!((sigma - 1.0).abs() < 0.05, "{sigma}");
    }
}
