//! Isochronous UDP latency probe: a stateless echo server and a client that
//! turns echoes into a trace.
//!
//! Both ends timestamp with the system wall clock, so one-way delays are only
//! meaningful when the two clocks are synchronised (or on one host).

mod client;
mod server;

use std::time::{SystemTime, UNIX_EPOCH};

pub use client::{run_client, ProbeConfig, ProbeStats};
pub use server::{run_server, spawn_server, ServerHandle};

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("socket error: {0}")]
    SocketFailure(#[from] std::io::Error),
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
}

/// Nanoseconds since the Unix epoch.
pub fn wall_ns() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}
