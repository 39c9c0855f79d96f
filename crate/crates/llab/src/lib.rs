//! File formats, the UDP probe and the command line around `llab-core`.

pub mod artifacts;
pub mod cli;
pub mod figure;
pub mod format;
pub mod pipeline;
pub mod probe;
pub mod units;
