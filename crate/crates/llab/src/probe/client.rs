use std::collections::HashMap;
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use llab_core::trace::DirectionSet;
use llab_core::wire::{Packet, HEADER_LEN};
use llab_core::{LatencySample, Trace, TraceMetadata};

use super::{wall_ns, ProbeError};

/// Wall and monotonic clocks may drift apart by this much before the
/// difference is treated as a clock step.
const CLOCK_STEP_NS: i64 = 10_000_000;
/// Sleep until this close to a deadline, then spin.
const SPIN_WINDOW: Duration = Duration::from_micros(300);
const RECV_POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub server: SocketAddr,
    pub interval_ns: u64,
    pub duration_ns: u64,
    pub payload_size: usize,
    pub timeout_ms: u64,
}

impl ProbeConfig {
    pub fn new(server: SocketAddr) -> Self {
        Self {
            server,
            interval_ns: 2_000_000,
            duration_ns: 60_000_000_000,
            payload_size: 64,
            timeout_ms: 1000,
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.interval_ns < 100_000 {
            return Err(ProbeError::InvalidConfig("interval must be at least 100 us".into()));
        }
        if self.payload_size < HEADER_LEN {
            return Err(ProbeError::InvalidConfig(format!("payload must be at least {HEADER_LEN} bytes")));
        }
        if self.duration_ns < self.interval_ns {
            return Err(ProbeError::InvalidConfig("duration shorter than one interval".into()));
        }
        if self.timeout_ms == 0 {
            return Err(ProbeError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn n_probes(&self) -> u64 {
        self.duration_ns / self.interval_ns
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeStats {
    pub sent: u64,
    pub replies: u64,
    /// Replies that arrived after their probe timed out.
    pub late: u64,
    pub send_errors: u64,
    /// Samples dropped because the wall clock stepped.
    pub clock_steps: u64,
    /// `|actual - scheduled|` send time per probe, ns.
    pub pacing_error_ns: Vec<u64>,
}

impl ProbeStats {
    pub fn reply_fraction(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.replies as f64 / self.sent as f64
        }
    }

    /// Nearest-rank pacing error percentile, ns.
    pub fn pacing_percentile(&self, q: f64) -> u64 {
        if self.pacing_error_ns.is_empty() {
            return 0;
        }
        let mut v = self.pacing_error_ns.clone();
        v.sort_unstable();
        let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
        v[rank - 1]
    }
}

#[derive(Clone, Copy)]
struct Pending {
    t_send: u64,
    sent_at: Instant,
    stepped: bool,
}

#[derive(Clone, Copy)]
enum Outcome {
    Reply { ul: Option<u64>, dl: Option<u64>, rtt: u64 },
    Dropped,
}

/// Offset between the wall clock and the monotonic clock, relative to the
/// pair captured at start.
struct ClockPair {
    wall0: u64,
    mono0: Instant,
}

impl ClockPair {
    fn skew(&self, wall: u64, at: Instant) -> i64 {
        let mono = at.duration_since(self.mono0).as_nanos() as i64;
        (wall as i64 - self.wall0 as i64) - mono
    }
}

fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let left = deadline - now;
        if left > SPIN_WINDOW {
            std::thread::sleep(left - SPIN_WINDOW);
        } else {
            std::hint::spin_loop();
        }
    }
}

fn delta(later: u64, earlier: u64) -> Option<u64> {
    later.checked_sub(earlier)
}

/// Sends `n_probes` probes at absolute deadlines `t0 + i * interval` from a
/// sender thread while a receiver thread matches echoes by sequence number.
/// Probes without a reply within the timeout are lost.
pub fn run_client(config: &ProbeConfig) -> Result<(Trace, ProbeStats), ProbeError> {
    config.validate()?;
    let local: SocketAddr = if config.server.is_ipv4() {
        "0.0.0.0:0".parse().unwrap()
    } else {
        "[::]:0".parse().unwrap()
    };
    let socket = UdpSocket::bind(local).map_err(|source| ProbeError::BindFailure {
        addr: local.to_string(),
        source,
    })?;
    socket.connect(config.server)?;
    socket.set_read_timeout(Some(RECV_POLL))?;

    let n = config.n_probes();
    let timeout = Duration::from_millis(config.timeout_ms);
    let pending: Mutex<HashMap<u64, Pending>> = Mutex::new(HashMap::new());
    let sending_done = AtomicBool::new(false);
    let clock = ClockPair {
        wall0: wall_ns(),
        mono0: Instant::now(),
    };
    // First deadline a little in the future so both threads are running.
    let t0 = clock.mono0 + Duration::from_millis(5);

    let (send_log, recv_log) = std::thread::scope(|scope| {
        let sender = scope.spawn(|| {
            let mut send_times = vec![0u64; n as usize];
            let mut pacing = Vec::with_capacity(n as usize);
            let mut errors = 0u64;
            let mut buf = vec![0u8; config.payload_size];
            for seq in 0..n {
                let deadline = t0 + Duration::from_nanos(config.interval_ns * seq);
                sleep_until(deadline);
                let now = Instant::now();
                let t_send = wall_ns();
                pacing.push(now.saturating_duration_since(deadline).as_nanos() as u64);
                send_times[seq as usize] = t_send;
                Packet::request(seq, t_send)
                    .encode_into(&mut buf)
                    .expect("payload holds the header");
                let stepped = clock.skew(t_send, now).abs() > CLOCK_STEP_NS;
                pending.lock().unwrap().insert(
                    seq,
                    Pending {
                        t_send,
                        sent_at: now,
                        stepped,
                    },
                );
                match socket.send(&buf) {
                    Ok(_) => {}
                    // A refused port shows up as an ICMP error on the next
                    // call; the probe simply goes unanswered.
                    Err(e) if e.kind() == ErrorKind::ConnectionRefused => errors += 1,
                    Err(e) => {
                        log::warn!("send of seq {seq} failed: {e}");
                        errors += 1;
                    }
                }
            }
            sending_done.store(true, Ordering::Release);
            (send_times, pacing, errors)
        });

        let receiver = scope.spawn(|| {
            let mut outcomes: Vec<Option<Outcome>> = vec![None; n as usize];
            let mut buf = vec![0u8; 65_536];
            let mut late = 0u64;
            let mut stepped_count = 0u64;
            let mut last_sweep = Instant::now();
            let mut done_at: Option<Instant> = None;
            loop {
                match socket.recv(&mut buf) {
                    Ok(len) => {
                        let t_recv = wall_ns();
                        let now = Instant::now();
                        let Ok(pkt) = Packet::decode(&buf[..len]) else { continue };
                        if !pkt.is_echoed() || pkt.seq >= n {
                            continue;
                        }
                        let Some(p) = pending.lock().unwrap().remove(&pkt.seq) else {
                            late += 1;
                            continue;
                        };
                        if now.duration_since(p.sent_at) > timeout {
                            outcomes[pkt.seq as usize] = Some(Outcome::Dropped);
                            late += 1;
                            continue;
                        }
                        if p.stepped || clock.skew(t_recv, now).abs() > CLOCK_STEP_NS {
                            outcomes[pkt.seq as usize] = Some(Outcome::Dropped);
                            stepped_count += 1;
                            continue;
                        }
                        let Some(rtt) = delta(t_recv, p.t_send) else {
                            outcomes[pkt.seq as usize] = Some(Outcome::Dropped);
                            stepped_count += 1;
                            continue;
                        };
                        outcomes[pkt.seq as usize] = Some(Outcome::Reply {
                            ul: delta(pkt.t_server_recv, p.t_send),
                            dl: delta(t_recv, pkt.t_server_send),
                            rtt,
                        });
                    }
                    Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
                    Err(e) if e.kind() == ErrorKind::ConnectionRefused => {}
                    Err(e) => log::warn!("receive failed: {e}"),
                }
                let now = Instant::now();
                if now.duration_since(last_sweep) >= Duration::from_millis(100) {
                    last_sweep = now;
                    pending
                        .lock()
                        .unwrap()
                        .retain(|_, p| now.duration_since(p.sent_at) <= timeout);
                }
                if sending_done.load(Ordering::Acquire) {
                    let done = *done_at.get_or_insert(now);
                    let drained = pending.lock().unwrap().is_empty();
                    if drained || now.duration_since(done) > timeout {
                        break;
                    }
                }
            }
            (outcomes, late, stepped_count)
        });

        (sender.join().expect("sender thread"), receiver.join().expect("receiver thread"))
    });

    let (send_times, pacing, send_errors) = send_log;
    let (outcomes, late, clock_steps) = recv_log;
    let mut samples = Vec::with_capacity(n as usize);
    let mut replies = 0;
    for seq in 0..n {
        let t_send = send_times[seq as usize];
        samples.push(match outcomes[seq as usize] {
            Some(Outcome::Reply { ul, dl, rtt }) => {
                replies += 1;
                LatencySample {
                    seq,
                    t_send,
                    ul,
                    dl,
                    rtt: Some(rtt),
                    lost: false,
                }
            }
            _ => LatencySample::lost(seq, t_send),
        });
    }
    let meta = TraceMetadata {
        source: format!("probe {}", config.server),
        satellite_path: None,
        terrestrial_path: None,
        start_ns: samples.first().map(|s| s.t_send),
        directions: DirectionSet::ALL,
    };
    // Wall-clock steps can reorder send stamps; keep the trace valid by
    // flagging backwards stamps as lost at the previous time.
    let mut last = 0;
    for s in samples.iter_mut() {
        if s.t_send < last {
            *s = LatencySample::lost(s.seq, last);
        }
        last = s.t_send;
    }
    let trace = Trace::new(samples, config.interval_ns, meta).expect("probe samples are ordered");
    Ok((
        trace,
        ProbeStats {
            sent: n,
            replies,
            late,
            send_errors,
            clock_steps,
            pacing_error_ns: pacing,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::spawn_server;

    #[test]
    fn short_loopback_run() {
        let server = spawn_server("127.0.0.1:0").unwrap();
        let mut config = ProbeConfig::new(server.addr);
        config.duration_ns = 200_000_000;
        let (trace, stats) = run_client(&config).unwrap();
        assert_eq!(trace.len(), 100);
        assert_eq!(trace.samples()[99].seq, 99);
        assert!(stats.reply_fraction() > 0.9, "{stats:?}");
    }

    #[test]
    fn server_down_gives_lost_samples() {
        let port = UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
        let mut config = ProbeConfig::new(port);
        config.duration_ns = 40_000_000;
        config.timeout_ms = 50;
        let (trace, stats) = run_client(&config).unwrap();
        assert_eq!(trace.len(), 20);
        assert!(trace.samples().iter().all(|s| s.lost));
        assert_eq!(stats.replies, 0);
    }

    #[test]
    fn config_limits() {
        let addr: SocketAddr = "127.0.0.1:9".parse().unwrap();
        let mut c = ProbeConfig::new(addr);
        c.interval_ns = 50_000;
        assert!(c.validate().is_err());
        let mut c = ProbeConfig::new(addr);
        c.payload_size = 39;
        assert!(c.validate().is_err());
        let mut c = ProbeConfig::new(addr);
        c.duration_ns = 10_000_000_000;
        assert_eq!(c.n_probes(), 5000);
    }
}
