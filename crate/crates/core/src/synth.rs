//! Seeded synthetic traces with known periodic structure.
//!
//! Latency at within-period bin `s` of period `p` is
//! `base_p + spike(s) + scale_p * X`, where `base_p` is the period level,
//! `spike` the boundary template, `scale_p` a per-period spread factor and
//! `X` an intra-period noise draw. Ground truth is computed from the
//! configured distribution rather than the realised samples.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::stats::normal;
use crate::trace::{DirectionSet, LatencySample, Trace, TraceMetadata};
use crate::NS_PER_MS;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SpikeShape {
    ExponentialDecay,
    LinearDecay,
}

/// Boundary spike: a decaying head at the period start and a rise into the
/// period end.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpikeTemplate {
    pub head_duration_ms: f64,
    pub tail_duration_ms: f64,
    /// Height above the period level at the first bin, ms.
    pub head_peak_ms: f64,
    /// Height at the last bin, ms.
    pub tail_peak_ms: f64,
    pub shape: SpikeShape,
}

impl Default for SpikeTemplate {
    fn default() -> Self {
        Self {
            head_duration_ms: 140.0,
            tail_duration_ms: 75.0,
            head_peak_ms: 74.0,
            tail_peak_ms: 20.0,
            shape: SpikeShape::ExponentialDecay,
        }
    }
}

impl SpikeTemplate {
    pub fn none() -> Self {
        Self {
            head_peak_ms: 0.0,
            tail_peak_ms: 0.0,
            ..Self::default()
        }
    }

    fn bins(ms: f64, dt_ms: f64) -> usize {
        libm::ceil(ms / dt_ms - 1e-9).max(0.0) as usize
    }
}

/// Spike offset in ms at within-period bin `s` of a `period`-bin cycle.
pub fn spike_value(template: &SpikeTemplate, s: usize, period: usize, dt_ms: f64) -> f64 {
    let head_bins = SpikeTemplate::bins(template.head_duration_ms, dt_ms);
    let tail_bins = SpikeTemplate::bins(template.tail_duration_ms, dt_ms);
    if s < head_bins {
        let t = s as f64 * dt_ms;
        match template.shape {
            SpikeShape::ExponentialDecay => {
                let tau = template.head_duration_ms / 4.0;
                template.head_peak_ms * libm::exp(-t / tau)
            }
            SpikeShape::LinearDecay => template.head_peak_ms * (1.0 - s as f64 / head_bins as f64),
        }
    } else if s + tail_bins >= period && s < period {
        let from_end = (period - 1 - s) as f64;
        match template.shape {
            SpikeShape::ExponentialDecay => {
                let tau = template.tail_duration_ms / 4.0;
                template.tail_peak_ms * libm::exp(-from_end * dt_ms / tau)
            }
            SpikeShape::LinearDecay => template.tail_peak_ms * (1.0 - from_end / tail_bins as f64),
        }
    } else {
        0.0
    }
}

/// Period level distribution: Gaussian truncated from below by rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodMeanSpec {
    pub mean_ms: f64,
    pub sd_ms: f64,
    pub floor_ms: f64,
}

impl Default for PeriodMeanSpec {
    fn default() -> Self {
        Self {
            mean_ms: 40.0,
            sd_ms: 8.0,
            floor_ms: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixtureComponent {
    pub weight: f64,
    pub offset_ms: f64,
    pub sigma_ms: f64,
}

/// Shape of the intra-period noise `X`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum IntraPeriodDist {
    Gaussian { sigma_ms: f64 },
    Mixture { components: Vec<MixtureComponent> },
    /// Gaussian body plus, with probability `tail_prob`, a generalized
    /// Pareto excess.
    ParetoTail {
        sigma_ms: f64,
        tail_prob: f64,
        tail_scale_ms: f64,
        xi: f64,
    },
}

impl IntraPeriodDist {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            IntraPeriodDist::Gaussian { sigma_ms } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma_ms * z
            }
            IntraPeriodDist::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = components[components.len() - 1];
                for c in components {
                    if u < c.weight {
                        pick = *c;
                        break;
                    }
                    u -= c.weight;
                }
                let z: f64 = StandardNormal.sample(rng);
                pick.offset_ms + pick.sigma_ms * z
            }
            IntraPeriodDist::ParetoTail {
                sigma_ms,
                tail_prob,
                tail_scale_ms,
                xi,
            } => {
                let z: f64 = StandardNormal.sample(rng);
                let mut x = sigma_ms * z;
                if rng.random::<f64>() < *tail_prob {
                    let u: f64 = rng.random();
                    x += gpd_draw(u, *tail_scale_ms, *xi);
                }
                x
            }
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        match self {
            IntraPeriodDist::Gaussian { sigma_ms } if *sigma_ms >= 0.0 => Ok(()),
            IntraPeriodDist::Mixture { components }
                if !components.is_empty()
                    && components.iter().all(|c| c.weight > 0.0 && c.sigma_ms >= 0.0) =>
            {
                Ok(())
            }
            IntraPeriodDist::ParetoTail {
                sigma_ms,
                tail_prob,
                tail_scale_ms,
                xi,
            } if *sigma_ms >= 0.0 && (0.0..1.0).contains(tail_prob) && *tail_scale_ms > 0.0 && *xi < 1.0 => {
                Ok(())
            }
            _ => Err(SynthError::InvalidConfig("bad intra-period distribution")),
        }
    }
}

/// Inverse-CDF draw of a generalized Pareto excess from a uniform `u`.
fn gpd_draw(u: f64, scale: f64, xi: f64) -> f64 {
    if libm::fabs(xi) < 1e-12 {
        -scale * libm::log1p(-u)
    } else {
        scale / xi * (libm::pow(1.0 - u, -xi) - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub period_ns: u64,
    pub dt_ns: u64,
    /// True phase: within-period bin at which periods start.
    pub phase_offset: usize,
    pub n_periods: usize,
    pub per_period_mean: PeriodMeanSpec,
    pub intra_period_dist: IntraPeriodDist,
    /// Per-period spread factor drawn uniformly from `[lo, hi]`.
    pub scale_range: (f64, f64),
    pub spike: SpikeTemplate,
    pub loss_rate: f64,
    /// Extra RTT on top of `ul + dl`, ms.
    pub rtt_overhead_ms: f64,
    /// Latency budget the ground-truth labels refer to, ms.
    pub lt_ms: f64,
    pub start_ns: u64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            period_ns: 15_000_000_000,
            dt_ns: 2_000_000,
            phase_offset: 0,
            n_periods: 10,
            per_period_mean: PeriodMeanSpec::default(),
            intra_period_dist: IntraPeriodDist::Gaussian { sigma_ms: 3.0 },
            scale_range: (1.0, 1.0),
            spike: SpikeTemplate::default(),
            loss_rate: 0.0,
            rtt_overhead_ms: 0.1,
            lt_ms: 50.0,
            start_ns: 1_700_000_000_000_000_000,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Bins per period.
    pub fn bins_per_period(&self) -> usize {
        (self.period_ns / self.dt_ns.max(1)) as usize
    }

    pub fn dt_ms(&self) -> f64 {
        self.dt_ns as f64 / NS_PER_MS
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dt_ns == 0 || self.period_ns == 0 || !self.period_ns.is_multiple_of(self.dt_ns) {
            return Err(SynthError::InvalidConfig("period must be a positive multiple of dt"));
        }
        let s = self.bins_per_period();
        if self.phase_offset >= s {
            return Err(SynthError::InvalidConfig("phase offset outside [0, S)"));
        }
        if self.n_periods == 0 {
            return Err(SynthError::InvalidConfig("need at least one period"));
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return Err(SynthError::InvalidConfig("loss rate must be in [0, 1)"));
        }
        let period_ms = self.period_ns as f64 / NS_PER_MS;
        let sp = &self.spike;
        if sp.head_duration_ms + sp.tail_duration_ms >= period_ms
            || sp.head_duration_ms < 0.0
            || sp.tail_duration_ms < 0.0
        {
            return Err(SynthError::InvalidConfig("spike windows exceed the period"));
        }
        if sp.head_peak_ms < 0.0 || sp.tail_peak_ms < 0.0 {
            return Err(SynthError::InvalidConfig("spike peaks must be non-negative"));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(SynthError::InvalidConfig("scale range must satisfy 0 < lo <= hi"));
        }
        if self.per_period_mean.sd_ms < 0.0 {
            return Err(SynthError::InvalidConfig("period mean sd must be non-negative"));
        }
        self.intra_period_dist.validate()
    }
}

/// What the generator put into a trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub s_star: usize,
    /// Period levels `base_p`, ms.
    pub period_means_ms: Vec<f64>,
    /// True 99th percentile of each period's stable-core latency, ms.
    pub p99_ms: Vec<f64>,
    /// Good when at least 99% of probes are expected within `lt_ms`.
    pub good: Vec<bool>,
    pub scales: Vec<f64>,
    pub lt_ms: f64,
}

/// Monte-Carlo sample size for distributions without a closed-form quantile.
pub const MC_DRAWS: usize = 1_000_000;

/// Quantile and CDF of the unit-scale noise `X`.
enum NoiseLaw {
    Gaussian { sigma: f64 },
    Sampled { sorted: Vec<f64> },
}

impl NoiseLaw {
    fn new(dist: &IntraPeriodDist, seed: u64) -> Self {
        match dist {
            IntraPeriodDist::Gaussian { sigma_ms } => NoiseLaw::Gaussian { sigma: *sigma_ms },
            other => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(7);
                let mut sorted: Vec<f64> = (0..MC_DRAWS).map(|_| other.sample(&mut rng)).collect();
                sorted.sort_by(f64::total_cmp);
                NoiseLaw::Sampled { sorted }
            }
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        match self {
            NoiseLaw::Gaussian { sigma } => sigma * normal::inv_cdf(q),
            NoiseLaw::Sampled { sorted } => {
                let idx = (libm::ceil(q * sorted.len() as f64 - 1e-9) as usize).clamp(1, sorted.len());
                sorted[idx - 1]
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            NoiseLaw::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    if x >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal::cdf(x / sigma)
                }
            }
            NoiseLaw::Sampled { sorted } => sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64,
        }
    }
}

/// A phase offset in `[0, bins_per_period)` drawn from `seed`.
pub fn random_phase(seed: u64, bins_per_period: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(9);
    rng.random_range(0..bins_per_period.max(1))
}

/// Generates `n_periods` complete periods starting at bin `phase_offset`.
///
/// Bins `0..phase_offset` hold the end of a preceding partial period, so the
/// first boundary is visible to edge detection and segmentation has to skip
/// the lead-in.
pub fn generate(config: &SynthConfig) -> Result<(Trace, GroundTruth), SynthError> {
    config.validate()?;
    let s = config.bins_per_period();
    let dt_ms = config.dt_ms();
    let lead = config.phase_offset;
    let total = lead + config.n_periods * s;

    let mut level_rng = ChaCha8Rng::seed_from_u64(config.seed);
    level_rng.set_stream(1);
    let mut ul_rng = ChaCha8Rng::seed_from_u64(config.seed);
    ul_rng.set_stream(2);
    let mut dl_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dl_rng.set_stream(3);
    let mut loss_rng = ChaCha8Rng::seed_from_u64(config.seed);
    loss_rng.set_stream(4);

    let pm = config.per_period_mean;
    let level_dist = Normal::new(pm.mean_ms, pm.sd_ms).map_err(|_| SynthError::InvalidConfig("bad period mean"))?;
    let draw_level = |rng: &mut ChaCha8Rng| -> f64 {
        for _ in 0..1000 {
            let v = level_dist.sample(rng);
            if v >= pm.floor_ms {
                return v;
            }
        }
        pm.floor_ms
    };
    let (scale_lo, scale_hi) = config.scale_range;
    let draw_scale = |rng: &mut ChaCha8Rng| -> f64 {
        if scale_hi > scale_lo {
            rng.random_range(scale_lo..=scale_hi)
        } else {
            scale_lo
        }
    };

    // Period -1 feeds the lead-in; periods 0.. are the complete ones.
    let lead_level = draw_level(&mut level_rng);
    let lead_scale = draw_scale(&mut level_rng);
    let mut levels = Vec::with_capacity(config.n_periods);
    let mut scales = Vec::with_capacity(config.n_periods);
    for _ in 0..config.n_periods {
        levels.push(draw_level(&mut level_rng));
        scales.push(draw_scale(&mut level_rng));
    }

    let spike: Vec<f64> = (0..s).map(|b| spike_value(&config.spike, b, s, dt_ms)).collect();
    let to_ns = |ms: f64| -> u64 { libm::round(ms.max(0.0) * NS_PER_MS) as u64 };
    let overhead = to_ns(config.rtt_overhead_ms);
    let dist = &config.intra_period_dist;

    let mut samples = Vec::with_capacity(total);
    for n in 0..total {
        let (level, scale, phase) = if n < lead {
            (lead_level, lead_scale, s - lead + n)
        } else {
            let p = (n - lead) / s;
            (levels[p], scales[p], (n - lead) % s)
        };
        let t_send = config.start_ns + n as u64 * config.dt_ns;
        // Draw noise unconditionally so loss does not shift the streams.
        let ul_ms = level + spike[phase] + scale * dist.sample(&mut ul_rng);
        let dl_ms = level + spike[phase] + scale * dist.sample(&mut dl_rng);
        let lost = config.loss_rate > 0.0 && loss_rng.random::<f64>() < config.loss_rate;
        if lost {
            samples.push(LatencySample::lost(n as u64, t_send));
        } else {
            let ul = to_ns(ul_ms);
            let dl = to_ns(dl_ms);
            samples.push(LatencySample {
                seq: n as u64,
                t_send,
                ul: Some(ul),
                dl: Some(dl),
                rtt: Some(ul + dl + overhead),
                lost: false,
            });
        }
    }

    let law = NoiseLaw::new(dist, config.seed);
    let q99 = law.quantile(0.99);
    let p99_ms: Vec<f64> = levels.iter().zip(&scales).map(|(l, sc)| l + sc * q99).collect();
    let keep = 1.0 - config.loss_rate;
    let good = levels
        .iter()
        .zip(&scales)
        .map(|(l, sc)| keep * law.cdf((config.lt_ms - l) / sc) >= 0.99)
        .collect();

    let meta = TraceMetadata {
        source: alloc::format!("synthetic seed={}", config.seed),
        satellite_path: Some("synthetic satellite segment".into()),
        terrestrial_path: Some("synthetic terrestrial segment".into()),
        start_ns: Some(config.start_ns),
        directions: DirectionSet::ALL,
    };
    let trace = Trace::new(samples, config.dt_ns, meta).expect("generator emits ordered samples");
    Ok((
        trace,
        GroundTruth {
            s_star: config.phase_offset,
            period_means_ms: levels,
            p99_ms,
            good,
            scales,
            lt_ms: config.lt_ms,
        },
    ))
}
