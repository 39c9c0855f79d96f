use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use llab_core::wire::{Packet, FLAG_ECHOED};

use super::{wall_ns, ProbeError};

const POLL: Duration = Duration::from_millis(100);
const MAX_DATAGRAM: usize = 65_536;

fn bind(addr: &str) -> Result<UdpSocket, ProbeError> {
    let socket = UdpSocket::bind(addr).map_err(|source| ProbeError::BindFailure {
        addr: addr.to_string(),
        source,
    })?;
    socket.set_read_timeout(Some(POLL))?;
    Ok(socket)
}

fn serve(socket: &UdpSocket, stop: &AtomicBool) -> Result<(), ProbeError> {
    let mut buf = vec![0u8; MAX_DATAGRAM];
    while !stop.load(Ordering::Relaxed) {
        let (len, peer) = match socket.recv_from(&mut buf) {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => continue,
            // ICMP errors from earlier replies surface here on some platforms.
            Err(e) if e.kind() == std::io::ErrorKind::ConnectionReset => continue,
            Err(e) => return Err(e.into()),
        };
        let t_recv = wall_ns();
        let mut pkt = match Packet::decode(&buf[..len]) {
            Ok(p) if !p.is_echoed() => p,
            _ => continue,
        };
        pkt.flags |= FLAG_ECHOED;
        pkt.t_server_recv = t_recv;
        pkt.t_server_send = wall_ns();
        pkt.encode_into(&mut buf[..len]).expect("decoded packets hold a header");
        if let Err(e) = socket.send_to(&buf[..len], peer) {
            log::debug!("reply to {peer} failed: {e}");
        }
    }
    Ok(())
}

/// Echoes probes on `bind_addr` until `stop` is set.
pub fn run_server(bind_addr: &str, stop: &AtomicBool) -> Result<(), ProbeError> {
    let socket = bind(bind_addr)?;
    log::info!("probe server listening on {}", socket.local_addr()?);
    serve(&socket, stop)
}

/// A server running on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<(), ProbeError>>>,
}

impl ServerHandle {
    pub fn stop(mut self) -> Result<(), ProbeError> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> Result<(), ProbeError> {
        self.stop.store(true, Ordering::Relaxed);
        match self.thread.take() {
            Some(t) => t.join().unwrap_or(Ok(())),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}

/// Binds synchronously, so a bad address fails here, then serves on a
/// background thread.
pub fn spawn_server(bind_addr: &str) -> Result<ServerHandle, ProbeError> {
    let socket = bind(bind_addr)?;
    let addr = socket.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = std::thread::Builder::new()
        .name("probe-server".into())
        .spawn(move || serve(&socket, &flag))?;
    Ok(ServerHandle {
        addr,
        stop,
        thread: Some(thread),
    })
}
