//! Client side of the control plane: resolve a tag through the directory,
//! then talk to the variable's own port.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Shutdown, SocketAddr, TcpStream};
use std::time::Duration;

use crate::error::{ControlError, ValueError};
use crate::listener::MAX_LINE;
use crate::protocol::{DirectoryEntry, ErrorCode, WireMessage, WireResponse};
use crate::value::{LiveValue, ValueType};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Sends one request line and reads one response line.
pub fn request(addr: SocketAddr, msg: &WireMessage) -> Result<WireResponse, ControlError> {
    request_with_timeout(addr, msg, DEFAULT_TIMEOUT)
}

pub fn request_with_timeout(
    addr: SocketAddr,
    msg: &WireMessage,
    timeout: Duration,
) -> Result<WireResponse, ControlError> {
    let line = exchange_raw(addr, &msg.encode(), timeout)?;
    WireResponse::decode(&line).map_err(|_| ControlError::Protocol(line))
}

/// Writes `line` verbatim and returns the server's reply line.
pub fn exchange_raw(addr: SocketAddr, line: &str, timeout: Duration) -> Result<String, ControlError> {
    let stream = TcpStream::connect_timeout(&addr, timeout).map_err(|e| match e.kind() {
        io::ErrorKind::ConnectionRefused => ControlError::ConnectionRefused { port: addr.port() },
        _ => ControlError::Io(e),
    })?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    (&stream).write_all(line.as_bytes())?;
    let _ = stream.shutdown(Shutdown::Write);
    let mut reply = String::new();
    BufReader::new((&stream).take(MAX_LINE)).read_line(&mut reply)?;
    if reply.is_empty() {
        return Err(ControlError::Protocol("connection closed without a response".into()));
    }
    Ok(reply)
}

/// Connection settings for a directory reachable at `host:dict_port`.
#[derive(Debug, Clone, Copy)]
pub struct ControlClient {
    pub host: IpAddr,
    pub dict_port: u16,
    pub timeout: Duration,
}

impl ControlClient {
    pub fn new(dict_port: u16) -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            dict_port,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_host(mut self, host: IpAddr) -> Self {
        self.host = host;
        self
    }

    fn dict_addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.dict_port)
    }

    fn addr(&self, port: u16) -> SocketAddr {
        SocketAddr::new(self.host, port)
    }

    fn call(&self, addr: SocketAddr, msg: &WireMessage) -> Result<WireResponse, ControlError> {
        request_with_timeout(addr, msg, self.timeout)
    }

    pub fn ping(&self) -> Result<(), ControlError> {
        self.call(self.dict_addr(), &WireMessage::ping())?
            .into_result()
            .map(drop)
            .map_err(ControlError::Remote)
    }

    pub fn resolve(&self, tag: &str) -> Result<(u16, ValueType), ControlError> {
        let resp = self.call(self.dict_addr(), &WireMessage::resolve(tag))?;
        match resp.into_result() {
            Ok(WireResponse {
                port: Some(port),
                kind: Some(kind),
                ..
            }) => Ok((port, kind)),
            Ok(other) => Err(ControlError::Protocol(other.encode())),
            Err(ErrorCode::UnknownTag) => Err(ControlError::UnknownTag(tag.to_string())),
            Err(code) => Err(ControlError::Remote(code)),
        }
    }

    pub fn list(&self) -> Result<Vec<DirectoryEntry>, ControlError> {
        let resp = self.call(self.dict_addr(), &WireMessage::list())?;
        match resp.into_result() {
            Ok(r) => Ok(r.vars.unwrap_or_default()),
            Err(code) => Err(ControlError::Remote(code)),
        }
    }

    /// Resolves `tag` and reads its current value.
    pub fn get(&self, tag: &str) -> Result<(LiveValue, ValueType), ControlError> {
        let (port, kind) = self.resolve(tag)?;
        self.get_at(port).map(|v| (v, kind))
    }

    fn get_at(&self, port: u16) -> Result<LiveValue, ControlError> {
        match self.call(self.addr(port), &WireMessage::get())?.into_result() {
            Ok(WireResponse { value: Some(v), .. }) => Ok(v),
            Ok(other) => Err(ControlError::Protocol(other.encode())),
            Err(code) => Err(ControlError::Remote(code)),
        }
    }

    /// Resolves `tag`, parses `raw` according to the resolved type and sends
    /// the set to the variable's port. Nothing is sent when parsing fails.
    pub fn set_raw(&self, tag: &str, raw: &str) -> Result<WireResponse, ControlError> {
        let (port, kind) = self.resolve(tag)?;
        let value = kind.parse_raw(raw)?;
        self.set_at(port, value)
    }

    /// Like [`set_raw`](Self::set_raw) for an already typed value. The
    /// value is checked against the resolved type before sending.
    pub fn set_value(&self, tag: &str, value: LiveValue) -> Result<WireResponse, ControlError> {
        let (port, kind) = self.resolve(tag)?;
        let value = match kind {
            ValueType::Trigger => match value {
                LiveValue::Bool(_) => value,
                other => {
                    return Err(ValueError::TypeMismatch {
                        expected: kind,
                        found: other.to_string(),
                    }
                    .into())
                }
            },
            _ => value.coerce_to(kind)?,
        };
        self.set_at(port, value)
    }

    fn set_at(&self, port: u16, value: LiveValue) -> Result<WireResponse, ControlError> {
        let resp = self.call(self.addr(port), &WireMessage::set(value))?;
        match resp.error {
            None => Ok(resp),
            Some(code) => Err(ControlError::Remote(code)),
        }
    }

    /// Arms the trigger registered under `tag`.
    pub fn fire(&self, tag: &str) -> Result<WireResponse, ControlError> {
        let (port, kind) = self.resolve(tag)?;
        if kind != ValueType::Trigger {
            return Err(ValueError::TypeMismatch {
                expected: ValueType::Trigger,
                found: kind.to_string(),
            }
            .into());
        }
        self.set_at(port, LiveValue::Bool(true))
    }
}

/// Resolve-then-set against the directory on loopback `dict_port`.
pub fn remote_set(dict_port: u16, tag: &str, raw_value: &str) -> Result<WireResponse, ControlError> {
    ControlClient::new(dict_port).set_raw(tag, raw_value)
}
