//! One-dimensional Gaussian mixtures fitted by EM.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal;
use super::{check_q, check_samples, Fit, FitConfig, FitError, FitMeta, FitWarning, LatencyModel, QuantileError};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GmmComponent {
    pub pi: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Mixture weights sum to one. Components are ordered by mean.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gmm {
    pub components: Vec<GmmComponent>,
}

impl Gmm {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.pi * normal::pdf((x - c.mu) / c.sigma) / c.sigma)
            .sum()
    }

    pub fn loglik(&self, samples: &[f64]) -> f64 {
        let consts = log_consts(&self.components);
        let mut scratch = vec![0.0; self.k()];
        samples
            .iter()
            .map(|&x| log_joint(&consts, x, &mut scratch))
            .sum()
    }

    fn bracket(&self) -> (f64, f64) {
        self.components.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), c| (lo.min(c.mu - 10.0 * c.sigma), hi.max(c.mu + 10.0 * c.sigma)),
        )
    }
}

impl LatencyModel for Gmm {
    fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.pi * normal::cdf((x - c.mu) / c.sigma))
            .sum()
    }

    fn exceedance(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.pi * normal::sf((x - c.mu) / c.sigma))
            .sum()
    }

    /// Bisection on the mixture CDF down to a 1e-9 ms bracket.
    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        check_q(q)?;
        let (mut lo, mut hi) = self.bracket();
        for _ in 0..200 {
            if hi - lo <= 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Log-likelihood traces of every EM restart, in restart order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmHistory {
    pub restarts: Vec<Vec<f64>>,
}

impl EmHistory {
    /// Steps where the log-likelihood fell by more than floating-point slack.
    pub fn decreases(&self) -> usize {
        self.restarts
            .iter()
            .map(|h| h.windows(2).filter(|w| w[1] < w[0] - ll_slack(w[0])).count())
            .sum()
    }
}

/// Rounding slack for comparing successive log-likelihoods.
fn ll_slack(ll: f64) -> f64 {
    1e-10 * (1.0 + libm::fabs(ll))
}

/// EM fit of a `k`-component mixture. Deterministic for a given `seed`;
/// restart `i` is initialised from `seed + i`.
pub fn fit_gmm(
    samples: &[f64],
    k: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<Fit<Gmm>, FitError> {
    fit_gmm_with_history(samples, k, config, seed).map(|(fit, _)| fit)
}

/// [`fit_gmm`] that also returns the per-iteration log-likelihoods.
pub fn fit_gmm_with_history(
    samples: &[f64],
    k: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<(Fit<Gmm>, EmHistory), FitError> {
    if k == 0 {
        return Err(FitError::NoComponents);
    }
    check_samples(samples, 10 * k)?;

    let restarts = config.gmm_restarts.max(1);
    let mut best: Option<EmRun> = None;
    let mut history = EmHistory {
        restarts: Vec::with_capacity(restarts),
    };
    for i in 0..restarts {
        let run_seed = seed.wrapping_add(i as u64);
        let run = run_em(samples, k, config, run_seed);
        history.restarts.push(run.trace.clone());
        let better = match &best {
            None => true,
            Some(b) => run.loglik > b.loglik,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut components = best.components;
    components.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    let meta = FitMeta {
        n: samples.len(),
        loglik: Some(best.loglik),
        converged: best.converged,
        seed: Some(best.seed),
        warning: (!best.converged).then_some(FitWarning::NoConvergence),
    };
    Ok((
        Fit {
            model: Gmm { components },
            meta,
        },
        history,
    ))
}

struct EmRun {
    components: Vec<GmmComponent>,
    loglik: f64,
    converged: bool,
    seed: u64,
    trace: Vec<f64>,
}

/// Per-component constants of the log density: `ln pi - ln sigma - ln sqrt(2 pi)`
/// and `1 / sigma`.
fn log_consts(components: &[GmmComponent]) -> Vec<(f64, f64, f64)> {
    components
        .iter()
        .map(|c| (libm::log(c.pi) - libm::log(c.sigma) - LN_SQRT_2PI, c.mu, 1.0 / c.sigma))
        .collect()
}

/// `ln sum_j pi_j N(x | mu_j, sigma_j)`; leaves per-component log joints in
/// `scratch`.
fn log_joint(consts: &[(f64, f64, f64)], x: f64, scratch: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (&(offset, mu, inv_sigma), s) in consts.iter().zip(scratch.iter_mut()) {
        let z = (x - mu) * inv_sigma;
        *s = offset - 0.5 * z * z;
        max = max.max(*s);
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = scratch.iter().map(|s| libm::exp(s - max)).sum();
    max + libm::log(sum)
}

fn run_em(samples: &[f64], k: usize, config: &FitConfig, seed: u64) -> EmRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components = kmeanspp_init(samples, k, config.gmm_min_sigma, &mut rng);
    let n = samples.len();
    let mut resp = vec![0.0; n * k];

    let mut ll = e_step(samples, &components, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    for _ in 0..config.gmm_max_iter {
        m_step(samples, &resp, &mut components, config.gmm_min_sigma);
        let next = e_step(samples, &components, &mut resp);
        debug_assert!(
            next >= ll - ll_slack(ll),
            "EM log-likelihood decreased: {ll} -> {next}"
        );
        trace.push(next);
        let change = libm::fabs(next - ll);
        ll = next;
        if change <= config.gmm_tol * libm::fabs(ll).max(1e-300) {
            converged = true;
            break;
        }
    }
    EmRun {
        components,
        loglik: ll,
        converged,
        seed,
        trace,
    }
}

/// Fills `resp` (row-major, `n x k`) with responsibilities; returns the
/// log-likelihood of the current parameters.
fn e_step(samples: &[f64], components: &[GmmComponent], resp: &mut [f64]) -> f64 {
    let k = components.len();
    let consts = log_consts(components);
    let mut ll = 0.0;
    for (x, row) in samples.iter().zip(resp.chunks_exact_mut(k)) {
        let lse = log_joint(&consts, *x, row);
        for r in row.iter_mut() {
            *r = libm::exp(*r - lse);
        }
        ll += lse;
    }
    ll
}

fn m_step(samples: &[f64], resp: &[f64], components: &mut [GmmComponent], min_sigma: f64) {
    let k = components.len();
    let n = samples.len() as f64;
    for (j, c) in components.iter_mut().enumerate() {
        let mut nk = 0.0;
        let mut sx = 0.0;
        for (x, row) in samples.iter().zip(resp.chunks_exact(k)) {
            nk += row[j];
            sx += row[j] * x;
        }
        c.pi = nk / n;
        if nk <= 1e-12 * n {
            // Empty component: keep its location and shape.
            continue;
        }
        let mu = sx / nk;
        let mut sxx = 0.0;
        for (x, row) in samples.iter().zip(resp.chunks_exact(k)) {
            let d = x - mu;
            sxx += row[j] * d * d;
        }
        c.mu = mu;
        c.sigma = libm::sqrt(sxx / nk).max(min_sigma);
    }
    let total: f64 = components.iter().map(|c| c.pi).sum();
    for c in components.iter_mut() {
        c.pi /= total;
    }
}

/// k-means++ seeding followed by one hard assignment to get weights and
/// spreads.
fn kmeanspp_init(samples: &[f64], k: usize, min_sigma: f64, rng: &mut ChaCha8Rng) -> Vec<GmmComponent> {
    let n = samples.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(samples[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = samples.iter().map(|x| (x - centers[0]) * (x - centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            samples[pick]
        } else {
            samples[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, x) in d2.iter_mut().zip(samples) {
            *d = d.min((x - next) * (x - next));
        }
    }

    let mean = samples.iter().sum::<f64>() / n as f64;
    let global_sd = libm::sqrt(samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64)
        .max(min_sigma);
    let mut count = vec![0usize; k];
    let mut sum = vec![0.0; k];
    let mut sum2 = vec![0.0; k];
    for &x in samples {
        let j = nearest(&centers, x);
        count[j] += 1;
        sum[j] += x;
        sum2[j] += x * x;
    }
    let mut components: Vec<GmmComponent> = (0..k)
        .map(|j| {
            if count[j] < 2 {
                GmmComponent {
                    pi: 1.0 / n as f64,
                    mu: centers[j],
                    sigma: global_sd,
                }
            } else {
                let m = sum[j] / count[j] as f64;
                let var = (sum2[j] / count[j] as f64 - m * m).max(0.0);
                GmmComponent {
                    pi: count[j] as f64 / n as f64,
                    mu: m,
                    sigma: libm::sqrt(var).max(min_sigma),
                }
            }
        })
        .collect();
    let total: f64 = components.iter().map(|c| c.pi).sum();
    for c in components.iter_mut() {
        c.pi /= total;
    }
    components
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = libm::fabs(x - c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}
