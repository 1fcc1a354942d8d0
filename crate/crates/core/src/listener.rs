//! One-request-per-connection TCP listener running on its own thread.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::error::ControlError;
use crate::protocol::{WireMessage, WireResponse};

/// Longest request line accepted, in bytes.
pub const MAX_LINE: u64 = 64 * 1024;

const READ_TIMEOUT: Duration = Duration::from_secs(5);

pub(crate) type Handler = dyn Fn(WireMessage, SocketAddr) -> WireResponse + Send + Sync;

/// Accept loop that stops and joins its thread on drop.
pub(crate) struct Listener {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Listener {
    pub(crate) fn spawn(addr: SocketAddr, name: String, handler: Arc<Handler>) -> Result<Self, ControlError> {
        let socket = TcpListener::bind(addr).map_err(|source| ControlError::PortUnavailable {
            port: addr.port(),
            source,
        })?;
        let addr = socket.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let stop = Arc::clone(&stop);
            thread::Builder::new()
                .name(name)
                .spawn(move || accept_loop(socket, &stop, &*handler))?
        };
        Ok(Self {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    pub(crate) fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for Listener {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let wake = SocketAddr::new(connectable(self.addr.ip()), self.addr.port());
        let _ = TcpStream::connect_timeout(&wake, Duration::from_millis(500));
        if let Some(t) = self.thread.take() {
            if t.thread().id() != thread::current().id() {
                let _ = t.join();
            }
        }
    }
}

/// Maps a wildcard bind address to the matching loopback address.
pub(crate) fn connectable(ip: IpAddr) -> IpAddr {
    match ip {
        IpAddr::V4(v4) if v4.is_unspecified() => IpAddr::V4(Ipv4Addr::LOCALHOST),
        IpAddr::V6(v6) if v6.is_unspecified() => IpAddr::V6(Ipv6Addr::LOCALHOST),
        other => other,
    }
}

fn accept_loop(socket: TcpListener, stop: &AtomicBool, handler: &Handler) {
    for conn in socket.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = conn else { continue };
        let Ok(peer) = stream.peer_addr() else { continue };
        // Errors on a single connection never take the listener down.
        let _ = serve_connection(stream, peer, handler);
    }
}

fn serve_connection(stream: TcpStream, peer: SocketAddr, handler: &Handler) -> io::Result<()> {
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    stream.set_write_timeout(Some(READ_TIMEOUT))?;
    let mut reader = BufReader::new((&stream).take(MAX_LINE));
    let mut line = String::new();
    let response = match reader.read_line(&mut line) {
        Ok(0) => return Ok(()),
        Ok(_) => match WireMessage::decode(&line) {
            Ok(msg) => handler(msg, peer),
            Err(code) => WireResponse::err(code),
        },
        // Invalid UTF-8 or an oversized line.
        Err(e) if e.kind() == io::ErrorKind::InvalidData => {
            WireResponse::err(crate::protocol::ErrorCode::ParseError)
        }
        Err(e) => return Err(e),
    };
    let mut out = &stream;
    out.write_all(response.encode().as_bytes())?;
    out.flush()?;
    stream.shutdown(Shutdown::Both)
}
