//! Analysis core for periodic LEO satellite latency traces.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the whole numeric
//! pipeline: the trace data model and its sanity checks, a seeded synthetic
//! trace generator with analytic ground truth, period segmentation, intra-period
//! distribution fitting, period classification and availability metrics, plus
//! the probe wire codec. File formats, sockets and the command line live in the
//! `llab` companion crate.
//!
//! Enable `rayon` to parallelise the per-period maps; results are identical
//! to the sequential build.
#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod classify;
mod exec;
pub mod robust;
pub mod segment;
pub mod stats;
pub mod synth;
pub mod trace;
pub mod wire;

pub use trace::{Direction, LatencySample, LatencySeries, Trace, TraceError, TraceMetadata};

/// Nanoseconds per millisecond.
pub const NS_PER_MS: f64 = 1.0e6;

#[inline]
pub(crate) fn ns_to_ms(ns: u64) -> f64 {
    ns as f64 / NS_PER_MS
}
