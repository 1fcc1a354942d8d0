//! The process-wide directory mapping tags to listener ports, and the
//! handles that tie a live variable to its listener and its entry.

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::ops::Deref;
use std::sync::{Arc, Mutex, MutexGuard, Weak};
use std::time::Duration;

use rand::RngCore;

use crate::client;
use crate::error::{ControlError, ValueError};
use crate::listener::{connectable, Listener};
use crate::livevar::{LiveTrigger, LiveVar};
use crate::protocol::{DirectoryEntry, ErrorCode, Op, WireMessage, WireResponse};
use crate::value::{LiveValue, ValueType};

/// Environment variable holding the requested directory port.
pub const PORT_ENV: &str = "LIVETUNE_PORT";
/// Environment variable overriding the bind address (default loopback).
pub const BIND_ENV: &str = "LIVETUNE_BIND";
/// Prefix of the startup line announcing the directory port.
pub const PORT_ANNOUNCE_PREFIX: &str = "LIVETUNE_DICT_PORT=";

const REMOTE_LIST_TIMEOUT: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectoryConfig {
    /// Requested port; 0 lets the OS pick.
    pub port: u16,
    /// Address shared by the directory and every variable listener.
    pub bind: IpAddr,
}

impl Default for DirectoryConfig {
    fn default() -> Self {
        Self {
            port: 0,
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
        }
    }
}

impl DirectoryConfig {
    pub fn with_port(port: u16) -> Self {
        Self {
            port,
            ..Self::default()
        }
    }

    /// Reads `LIVETUNE_PORT` and `LIVETUNE_BIND`. Unset or unparsable values
    /// fall back to an ephemeral loopback port.
    pub fn from_env() -> Self {
        let port = std::env::var(PORT_ENV)
            .ok()
            .and_then(|p| p.trim().parse().ok())
            .unwrap_or(0);
        let bind = std::env::var(BIND_ENV)
            .ok()
            .and_then(|b| b.trim().parse().ok())
            .unwrap_or(IpAddr::V4(Ipv4Addr::LOCALHOST));
        Self { port, bind }
    }
}

#[derive(Clone)]
enum Source {
    Var(LiveVar),
    Trigger(LiveTrigger),
    /// Registered over the wire; values are fetched from its port.
    Remote,
}

#[derive(Clone)]
struct Entry {
    port: u16,
    kind: ValueType,
    source: Source,
}

struct DirectoryState {
    bind: IpAddr,
    secret: String,
    entries: Mutex<BTreeMap<String, Entry>>,
}

impl DirectoryState {
    fn entries(&self) -> MutexGuard<'_, BTreeMap<String, Entry>> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn remove_if_port(&self, tag: &str, port: u16) {
        let mut entries = self.entries();
        if entries.get(tag).is_some_and(|e| e.port == port) {
            entries.remove(tag);
        }
    }

    fn snapshot(&self, with_values: bool) -> Vec<DirectoryEntry> {
        let entries: Vec<(String, Entry)> =
            self.entries().iter().map(|(t, e)| (t.clone(), e.clone())).collect();
        entries
            .into_iter()
            .map(|(tag, e)| {
                let value = with_values
                    .then(|| match &e.source {
                        Source::Var(v) => Some(v.current()),
                        Source::Trigger(t) => Some(LiveValue::Bool(t.is_armed())),
                        Source::Remote => {
                            let addr = SocketAddr::new(connectable(self.bind), e.port);
                            client::request_with_timeout(addr, &WireMessage::get(), REMOTE_LIST_TIMEOUT)
                                .ok()
                                .and_then(|r| r.value)
                        }
                    })
                    .flatten();
                DirectoryEntry {
                    tag,
                    port: e.port,
                    kind: e.kind,
                    value,
                }
            })
            .collect()
    }

    fn handle(&self, msg: WireMessage, peer: SocketAddr) -> WireResponse {
        match msg.op {
            Op::Ping => WireResponse::ok(),
            Op::List => WireResponse::with_vars(self.snapshot(true)),
            Op::Resolve => {
                let tag = msg.tag.unwrap_or_default();
                match self.entries().get(&tag) {
                    Some(e) => WireResponse::with_entry(e.port, e.kind),
                    None => WireResponse::err(ErrorCode::UnknownTag),
                }
            }
            Op::Register | Op::Deregister => {
                if !peer.ip().is_loopback() || msg.secret.as_deref() != Some(self.secret.as_str()) {
                    return WireResponse::err(ErrorCode::UnsupportedOp);
                }
                let tag = msg.tag.unwrap_or_default();
                let mut entries = self.entries();
                if msg.op == Op::Deregister {
                    return match entries.remove(&tag) {
                        Some(_) => WireResponse::ok(),
                        None => WireResponse::err(ErrorCode::UnknownTag),
                    };
                }
                let (Some(port), Some(kind)) = (msg.port, msg.kind) else {
                    return WireResponse::err(ErrorCode::ParseError);
                };
                if tag.is_empty() || port == 0 {
                    return WireResponse::err(ErrorCode::InvalidValue);
                }
                if entries.contains_key(&tag) {
                    return WireResponse::err(ErrorCode::DuplicateTag);
                }
                entries.insert(
                    tag,
                    Entry {
                        port,
                        kind,
                        source: Source::Remote,
                    },
                );
                WireResponse::ok()
            }
            Op::Get | Op::Set => WireResponse::err(ErrorCode::UnsupportedOp),
        }
    }
}

/// Registry of live variables and triggers, serving `list`/`resolve` on its
/// own port. Cloning yields another reference to the same directory.
#[derive(Clone)]
pub struct Directory {
    state: Arc<DirectoryState>,
    listener: Arc<Listener>,
}

impl Directory {
    /// Starts a directory without touching the process-wide singleton.
    ///
    /// Most programs want [`start_directory`]; this constructor exists for
    /// embedding several isolated control planes in one process, as tests do.
    pub fn bind(config: DirectoryConfig) -> Result<Self, ControlError> {
        let mut secret = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut secret);
        let state = Arc::new(DirectoryState {
            bind: config.bind,
            secret: secret.iter().map(|b| format!("{b:02x}")).collect(),
            entries: Mutex::new(BTreeMap::new()),
        });
        let weak: Weak<DirectoryState> = Arc::downgrade(&state);
        let listener = Listener::spawn(
            SocketAddr::new(config.bind, config.port),
            "livetune-directory".into(),
            Arc::new(move |msg, peer| match weak.upgrade() {
                Some(state) => state.handle(msg, peer),
                None => WireResponse::err(ErrorCode::UnsupportedOp),
            }),
        )?;
        Ok(Self {
            state,
            listener: Arc::new(listener),
        })
    }

    pub fn port(&self) -> u16 {
        self.listener.addr().port()
    }

    pub fn addr(&self) -> SocketAddr {
        self.listener.addr()
    }

    /// Nonce that authorizes `register`/`deregister` requests.
    pub fn secret(&self) -> &str {
        &self.state.secret
    }

    /// Creates a live variable, starts its listener and registers it.
    pub fn create_var(&self, tag: &str, initial: LiveValue) -> Result<VarHandle, ControlError> {
        if tag.is_empty() {
            return Err(ControlError::InvalidTag);
        }
        let var = LiveVar::new(tag, initial)?;
        let mut entries = self.state.entries();
        if entries.contains_key(tag) {
            return Err(ControlError::DuplicateTag(tag.to_string()));
        }
        let listener = {
            let var = var.clone();
            Listener::spawn(
                SocketAddr::new(self.state.bind, 0),
                format!("livetune-var-{tag}"),
                Arc::new(move |msg, _| serve_var(&var, msg)),
            )?
        };
        let port = listener.addr().port();
        entries.insert(
            tag.to_string(),
            Entry {
                port,
                kind: var.kind(),
                source: Source::Var(var.clone()),
            },
        );
        Ok(VarHandle {
            inner: Arc::new(HandleInner {
                live: var,
                tag: tag.to_string(),
                port,
                directory: Arc::downgrade(&self.state),
                _listener: listener,
            }),
        })
    }

    /// Creates a one-shot trigger, starts its listener and registers it.
    pub fn create_trigger(&self, tag: &str) -> Result<TriggerHandle, ControlError> {
        if tag.is_empty() {
            return Err(ControlError::InvalidTag);
        }
        let trigger = LiveTrigger::new(tag);
        let mut entries = self.state.entries();
        if entries.contains_key(tag) {
            return Err(ControlError::DuplicateTag(tag.to_string()));
        }
        let listener = {
            let trigger = trigger.clone();
            Listener::spawn(
                SocketAddr::new(self.state.bind, 0),
                format!("livetune-trigger-{tag}"),
                Arc::new(move |msg, _| serve_trigger(&trigger, msg)),
            )?
        };
        let port = listener.addr().port();
        entries.insert(
            tag.to_string(),
            Entry {
                port,
                kind: ValueType::Trigger,
                source: Source::Trigger(trigger.clone()),
            },
        );
        Ok(TriggerHandle {
            inner: Arc::new(HandleInner {
                live: trigger,
                tag: tag.to_string(),
                port,
                directory: Arc::downgrade(&self.state),
                _listener: listener,
            }),
        })
    }

    /// Registers an externally served entry.
    pub fn register(&self, entry: DirectoryEntry) -> Result<(), ControlError> {
        if entry.tag.is_empty() {
            return Err(ControlError::InvalidTag);
        }
        if entry.port == 0 {
            return Err(ValueError::OutOfRange("0".into()).into());
        }
        let mut entries = self.state.entries();
        if entries.contains_key(&entry.tag) {
            return Err(ControlError::DuplicateTag(entry.tag));
        }
        entries.insert(
            entry.tag,
            Entry {
                port: entry.port,
                kind: entry.kind,
                source: Source::Remote,
            },
        );
        Ok(())
    }

    pub fn deregister(&self, tag: &str) -> Result<(), ControlError> {
        match self.state.entries().remove(tag) {
            Some(_) => Ok(()),
            None => Err(ControlError::UnknownTag(tag.to_string())),
        }
    }

    pub fn resolve(&self, tag: &str) -> Option<(u16, ValueType)> {
        self.state.entries().get(tag).map(|e| (e.port, e.kind))
    }

    /// All entries, with current values.
    pub fn list(&self) -> Vec<DirectoryEntry> {
        self.state.snapshot(true)
    }

    pub fn len(&self) -> usize {
        self.state.entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn serve_var(var: &LiveVar, msg: WireMessage) -> WireResponse {
    match msg.op {
        Op::Ping => WireResponse::ok(),
        Op::Get => WireResponse::with_value(var.current(), var.kind()),
        Op::Set => match msg.value.map(|v| var.set(v)) {
            Some(Ok(_)) => WireResponse::ok(),
            Some(Err(e)) => WireResponse::err(e.code()),
            None => WireResponse::err(ErrorCode::ParseError),
        },
        _ => WireResponse::err(ErrorCode::UnsupportedOp),
    }
}

/// `set` with `true` arms the trigger; `get` reports whether it is armed.
fn serve_trigger(trigger: &LiveTrigger, msg: WireMessage) -> WireResponse {
    match msg.op {
        Op::Ping => WireResponse::ok(),
        Op::Get => WireResponse::with_value(LiveValue::Bool(trigger.is_armed()), ValueType::Trigger),
        Op::Set => match msg.value {
            Some(LiveValue::Bool(true)) => {
                trigger.fire();
                WireResponse::ok()
            }
            Some(LiveValue::Bool(false)) => WireResponse::err(ErrorCode::InvalidValue),
            Some(_) => WireResponse::err(ErrorCode::TypeMismatch),
            None => WireResponse::err(ErrorCode::ParseError),
        },
        _ => WireResponse::err(ErrorCode::UnsupportedOp),
    }
}

struct HandleInner<T> {
    live: T,
    tag: String,
    port: u16,
    directory: Weak<DirectoryState>,
    _listener: Listener,
}

impl<T> Drop for HandleInner<T> {
    fn drop(&mut self) {
        if let Some(dir) = self.directory.upgrade() {
            dir.remove_if_port(&self.tag, self.port);
        }
    }
}

/// A registered live variable. Dropping the last clone stops its listener
/// and removes its directory entry.
#[derive(Clone)]
pub struct VarHandle {
    inner: Arc<HandleInner<LiveVar>>,
}

impl VarHandle {
    pub fn port(&self) -> u16 {
        self.inner.port
    }

    /// Transport-free handle to the same variable, for loops that should
    /// not keep the listener alive.
    pub fn var(&self) -> LiveVar {
        self.inner.live.clone()
    }
}

impl Deref for VarHandle {
    type Target = LiveVar;

    fn deref(&self) -> &LiveVar {
        &self.inner.live
    }
}

impl std::fmt::Debug for VarHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VarHandle")
            .field("var", &self.inner.live)
            .field("port", &self.inner.port)
            .finish()
    }
}

/// A registered trigger.
#[derive(Clone)]
pub struct TriggerHandle {
    inner: Arc<HandleInner<LiveTrigger>>,
}

impl TriggerHandle {
    pub fn port(&self) -> u16 {
        self.inner.port
    }

    pub fn trigger(&self) -> LiveTrigger {
        self.inner.live.clone()
    }
}

impl Deref for TriggerHandle {
    type Target = LiveTrigger;

    fn deref(&self) -> &LiveTrigger {
        &self.inner.live
    }
}

impl std::fmt::Debug for TriggerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TriggerHandle")
            .field("trigger", &self.inner.live)
            .field("port", &self.inner.port)
            .finish()
    }
}

static GLOBAL: Mutex<Option<Directory>> = Mutex::new(None);

/// Starts the process-wide directory and announces its port on stderr as
/// `LIVETUNE_DICT_PORT=<n>`.
pub fn start_directory(config: DirectoryConfig) -> Result<Directory, ControlError> {
    let mut global = GLOBAL.lock().unwrap_or_else(|e| e.into_inner());
    if global.is_some() {
        return Err(ControlError::AlreadyRunning);
    }
    let dir = Directory::bind(config)?;
    eprintln!("{PORT_ANNOUNCE_PREFIX}{}", dir.port());
    *global = Some(dir.clone());
    Ok(dir)
}

/// The process-wide directory, if one was started.
pub fn global_directory() -> Option<Directory> {
    GLOBAL.lock().unwrap_or_else(|e| e.into_inner()).clone()
}

/// Creates a variable in the process-wide directory.
pub fn create_var(tag: &str, initial: LiveValue) -> Result<VarHandle, ControlError> {
    global_directory()
        .ok_or(ControlError::NotRunning)?
        .create_var(tag, initial)
}

/// Creates a trigger in the process-wide directory.
pub fn create_trigger(tag: &str) -> Result<TriggerHandle, ControlError> {
    global_directory()
        .ok_or(ControlError::NotRunning)?
        .create_trigger(tag)
}

/// Extracts `<n>` from a `LIVETUNE_DICT_PORT=<n>` line.
pub fn parse_port_announcement(line: &str) -> Option<u16> {
    line.trim_end()
        .strip_prefix(PORT_ANNOUNCE_PREFIX)
        .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|rest| rest.parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir() -> Directory {
        Directory::bind(DirectoryConfig::default()).unwrap()
    }

    #[test]
    fn create_registers_and_drop_deregisters() {
        let d = dir();
        let lr = d.create_var("lr", LiveValue::Float(0.01)).unwrap();
        assert_eq!(d.resolve("lr"), Some((lr.port(), ValueType::Float)));
        assert!(!lr.is_changed());
        drop(lr);
        assert_eq!(d.resolve("lr"), None);
        assert!(d.is_empty());
    }

    #[test]
    fn duplicate_tag_rejected() {
        let d = dir();
        let _lr = d.create_var("lr", LiveValue::Float(0.01)).unwrap();
        assert!(matches!(
            d.create_var("lr", LiveValue::Int(5)),
            Err(ControlError::DuplicateTag(_))
        ));
        assert!(matches!(d.create_trigger("lr"), Err(ControlError::DuplicateTag(_))));
    }

    #[test]
    fn invalid_initial_values_rejected() {
        let d = dir();
        assert!(matches!(
            d.create_var("flag", LiveValue::Float(f64::NAN)),
            Err(ControlError::Value(ValueError::NonFinite))
        ));
        assert!(matches!(d.create_var("", LiveValue::Int(1)), Err(ControlError::InvalidTag)));
        assert!(d.is_empty());
    }

    #[test]
    fn register_resolve_deregister() {
        let d = dir();
        let entry = DirectoryEntry {
            tag: "lr".into(),
            port: 50001,
            kind: ValueType::Float,
            value: None,
        };
        d.register(entry.clone()).unwrap();
        assert_eq!(d.resolve("lr"), Some((50001, ValueType::Float)));
        assert!(matches!(d.register(entry), Err(ControlError::DuplicateTag(_))));
        d.deregister("lr").unwrap();
        assert_eq!(d.resolve("lr"), None);
        assert!(matches!(d.deregister("lr"), Err(ControlError::UnknownTag(_))));
    }

    #[test]
    fn announcement_round_trips() {
        assert_eq!(parse_port_announcement("LIVETUNE_DICT_PORT=55001\n"), Some(55001));
        assert_eq!(parse_port_announcement("LIVETUNE_DICT_PORT="), None);
        assert_eq!(parse_port_announcement("LIVETUNE_DICT_PORT=-1"), None);
        assert_eq!(parse_port_announcement("PORT=1"), None);
    }

    #[test]
    fn port_in_use_is_reported() {
        let d = dir();
        let err = Directory::bind(DirectoryConfig::with_port(d.port())).err().unwrap();
        assert!(matches!(err, ControlError::PortUnavailable { .. }));
    }
}
