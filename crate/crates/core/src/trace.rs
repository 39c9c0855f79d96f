//! Canonical trace data model.
//!
//! Delays are integer nanoseconds. Analysis code pulls a [`LatencySeries`] of
//! float milliseconds out of a [`Trace`], indexed by transmission bin so that
//! lost probes keep their place.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ns_to_ms;
use crate::robust;

/// Slack allowed in `rtt >= ul + dl` for endpoint timestamping noise.
pub const EQ1_TOLERANCE_NS: u64 = 1_000_000;

/// Probe interval used when a trace does not pin one down (500 Hz).
pub const DEFAULT_DT_NS: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("duplicate sequence number {0}")]
    DuplicateSeq(u64),
    #[error("sequence numbers not strictly increasing at seq {0}")]
    SeqOrder(u64),
    #[error("send time decreases at seq {0}")]
    TimeReversal(u64),
    #[error("lost sample {0} carries delay values")]
    LostWithDelay(u64),
    #[error("nominal probe interval must be positive")]
    ZeroInterval,
}

/// Latency component of a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Ul,
    Dl,
    Rtt,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Ul, Direction::Dl, Direction::Rtt];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Ul => "ul",
            Direction::Dl => "dl",
            Direction::Rtt => "rtt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "ul" => Some(Direction::Ul),
            "dl" => Some(Direction::Dl),
            "rtt" => Some(Direction::Rtt),
            _ => None,
        }
    }
}

/// One probe observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatencySample {
    pub seq: u64,
    /// Client send time, nanoseconds since the epoch.
    pub t_send: u64,
    pub ul: Option<u64>,
    pub dl: Option<u64>,
    pub rtt: Option<u64>,
    pub lost: bool,
}

impl LatencySample {
    /// A lost probe placeholder.
    pub fn lost(seq: u64, t_send: u64) -> Self {
        Self {
            seq,
            t_send,
            ul: None,
            dl: None,
            rtt: None,
            lost: true,
        }
    }

    pub fn delay(&self, direction: Direction) -> Option<u64> {
        match direction {
            Direction::Ul => self.ul,
            Direction::Dl => self.dl,
            Direction::Rtt => self.rtt,
        }
    }

    /// `rtt < ul + dl - tolerance`, only defined when all three are present.
    pub fn violates_rtt_bound(&self, tolerance_ns: u64) -> Option<bool> {
        match (self.ul, self.dl, self.rtt) {
            (Some(ul), Some(dl), Some(rtt)) => {
                Some((rtt as u128) + (tolerance_ns as u128) < (ul as u128) + (dl as u128))
            }
            _ => None,
        }
    }

    fn check(&self) -> Result<(), TraceError> {
        if self.lost && (self.ul.is_some() || self.dl.is_some() || self.rtt.is_some()) {
            return Err(TraceError::LostWithDelay(self.seq));
        }
        Ok(())
    }
}

/// Which latency components a trace carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionSet {
    pub ul: bool,
    pub dl: bool,
    pub rtt: bool,
}

impl DirectionSet {
    pub const ALL: DirectionSet = DirectionSet {
        ul: true,
        dl: true,
        rtt: true,
    };

    pub fn contains(&self, direction: Direction) -> bool {
        match direction {
            Direction::Ul => self.ul,
            Direction::Dl => self.dl,
            Direction::Rtt => self.rtt,
        }
    }
}

/// Descriptive labels attached to a trace.
///
/// `satellite_path` and `terrestrial_path` name the two halves of the
/// end-to-end path the delays traverse. They are documentation; the delays are
/// never split along them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceMetadata {
    pub source: String,
    pub satellite_path: Option<String>,
    pub terrestrial_path: Option<String>,
    pub start_ns: Option<u64>,
    pub directions: DirectionSet,
}

impl TraceMetadata {
    /// Metadata whose direction flags follow the majority presence in `samples`.
    pub fn inferred(source: impl Into<String>, samples: &[LatencySample]) -> Self {
        let presence = direction_presence(samples);
        Self {
            source: source.into(),
            satellite_path: None,
            terrestrial_path: None,
            start_ns: samples.first().map(|s| s.t_send),
            directions: DirectionSet {
                ul: presence[0] >= 0.5,
                dl: presence[1] >= 0.5,
                rtt: presence[2] >= 0.5,
            },
        }
    }
}

/// Fraction of non-lost samples carrying each of UL, DL, RTT.
fn direction_presence(samples: &[LatencySample]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    let mut received = 0usize;
    for s in samples.iter().filter(|s| !s.lost) {
        received += 1;
        for (i, d) in Direction::ALL.iter().enumerate() {
            if s.delay(*d).is_some() {
                counts[i] += 1;
            }
        }
    }
    if received == 0 {
        return [0.0; 3];
    }
    counts.map(|c| c as f64 / received as f64)
}

/// Ordered probe samples plus their nominal interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<LatencySample>,
    dt_nominal: u64,
    meta: TraceMetadata,
}

impl Trace {
    /// Builds a trace from samples already in sequence order.
    pub fn new(
        samples: Vec<LatencySample>,
        dt_nominal: u64,
        meta: TraceMetadata,
    ) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::Empty);
        }
        if dt_nominal == 0 {
            return Err(TraceError::ZeroInterval);
        }
        samples[0].check()?;
        for w in samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            b.check()?;
            if b.seq == a.seq {
                return Err(TraceError::DuplicateSeq(b.seq));
            }
            if b.seq < a.seq {
                return Err(TraceError::SeqOrder(b.seq));
            }
            if b.t_send < a.t_send {
                return Err(TraceError::TimeReversal(b.seq));
            }
        }
        Ok(Self {
            samples,
            dt_nominal,
            meta,
        })
    }

    /// Sorts by sequence number first; duplicates are still rejected.
    pub fn from_unsorted(
        mut samples: Vec<LatencySample>,
        dt_nominal: u64,
        meta: TraceMetadata,
    ) -> Result<Self, TraceError> {
        samples.sort_by_key(|s| s.seq);
        Self::new(samples, dt_nominal, meta)
    }

    pub fn samples(&self) -> &[LatencySample] {
        &self.samples
    }

    pub fn dt_nominal(&self) -> u64 {
        self.dt_nominal
    }

    pub fn meta(&self) -> &TraceMetadata {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<LatencySample> {
        self.samples
    }

    /// Dense series in milliseconds, one slot per sequence number from the
    /// first to the last sample. Lost probes and sequence gaps are `None`.
    pub fn series(&self, direction: Direction) -> LatencySeries {
        let origin = self.samples[0].seq;
        let last = self.samples[self.samples.len() - 1].seq;
        let len = (last - origin + 1) as usize;
        let mut values = vec![None; len];
        for s in &self.samples {
            if let Some(d) = s.delay(direction) {
                values[(s.seq - origin) as usize] = Some(ns_to_ms(d));
            }
        }
        LatencySeries {
            origin,
            dt_ns: self.dt_nominal,
            values,
        }
    }
}

/// Latency in milliseconds per transmission bin. Global bin index of
/// `values[i]` is `origin + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencySeries {
    pub origin: u64,
    pub dt_ns: u64,
    pub values: Vec<Option<f64>>,
}

impl LatencySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end_bin(&self) -> u64 {
        self.origin + self.values.len() as u64
    }

    /// Values for global bins `[start, end)`. Bins outside the series are
    /// `None`.
    pub fn window(&self, start: u64, end: u64) -> Vec<Option<f64>> {
        (start..end)
            .map(|n| {
                n.checked_sub(self.origin)
                    .and_then(|i| self.values.get(i as usize).copied().flatten())
            })
            .collect()
    }

    pub fn dt_ms(&self) -> f64 {
        ns_to_ms(self.dt_ns)
    }
}

/// Sanity summary of a trace. Produced by [`validate_trace`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub n_samples: usize,
    pub n_lost: usize,
    pub loss_fraction: f64,
    /// Samples carrying all of UL, DL and RTT.
    pub n_complete: usize,
    /// Complete samples with `rtt < ul + dl - 1 ms`.
    pub rtt_bound_violations: usize,
    pub rtt_bound_violation_fraction: f64,
    pub interval_median_ns: f64,
    /// Raw median absolute deviation of consecutive send-time gaps.
    pub interval_mad_ns: f64,
    /// Presence fraction among received samples, in UL, DL, RTT order.
    pub direction_presence: [f64; 3],
    /// Metadata flags agree with field presence in at least 99% of received samples.
    pub directions_consistent: bool,
}

pub fn validate_trace(trace: &Trace) -> ValidationReport {
    let samples = trace.samples();
    let n_samples = samples.len();
    let n_lost = samples.iter().filter(|s| s.lost).count();
    let mut n_complete = 0;
    let mut violations = 0;
    for s in samples {
        if let Some(v) = s.violates_rtt_bound(EQ1_TOLERANCE_NS) {
            n_complete += 1;
            if v {
                violations += 1;
            }
        }
    }
    let gaps: Vec<f64> = samples
        .windows(2)
        .map(|w| (w[1].t_send - w[0].t_send) as f64)
        .collect();
    let (interval_median_ns, interval_mad_ns) =
        robust::median_mad(&gaps).unwrap_or((f64::NAN, f64::NAN));

    let presence = direction_presence(samples);
    let flags = trace.meta().directions;
    let directions_consistent = Direction::ALL.iter().enumerate().all(|(i, d)| {
        if flags.contains(*d) {
            presence[i] >= 0.99
        } else {
            presence[i] <= 0.01
        }
    });

    ValidationReport {
        n_samples,
        n_lost,
        loss_fraction: n_lost as f64 / n_samples as f64,
        n_complete,
        rtt_bound_violations: violations,
        rtt_bound_violation_fraction: if n_complete == 0 {
            0.0
        } else {
            violations as f64 / n_complete as f64
        },
        interval_median_ns,
        interval_mad_ns,
        direction_presence: presence,
        directions_consistent,
    }
}
