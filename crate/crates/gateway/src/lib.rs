//! HTTP bridge in front of the livetune control plane.
//!
//! Variable reads and writes are proxied to the TCP directory and variable
//! listeners; the gateway keeps no variable state. Training telemetry is
//! streamed to browsers as server-sent events.

pub mod bus;

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use livetune::{ControlClient, ControlError, ErrorCode, LiveValue};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::oneshot;
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::{Stream, StreamExt};
use tower_http::services::ServeDir;

pub use bus::{MetricEvent, TelemetryBus, REPLAY_LEN};

pub const DEFAULT_HTTP_PORT: u16 = 8080;
pub const HEARTBEAT: Duration = Duration::from_secs(15);
/// Prefix of the startup line announcing the HTTP port.
pub const HTTP_ANNOUNCE_PREFIX: &str = "LIVETUNE_HTTP_PORT=";

#[derive(Clone)]
pub struct GatewayState {
    pub client: ControlClient,
    pub bus: TelemetryBus,
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub dict_port: u16,
    pub bind: SocketAddr,
    /// Directory holding `index.html` and `assets/`; a placeholder page is
    /// served when absent.
    pub static_dir: Option<PathBuf>,
}

/// One row of `GET /api/vars`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarView {
    pub tag: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub value: Option<serde_json::Value>,
    pub port: u16,
}

#[derive(Debug, Deserialize)]
struct PutBody {
    value: serde_json::Value,
}

pub fn router(state: GatewayState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/vars", get(list_vars))
        .route("/api/vars/:tag", get(get_var).put(put_var))
        .route("/api/triggers/:tag", post(fire_trigger))
        .route("/api/metrics/stream", get(stream_metrics))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)),
    }
}

fn error_response(err: ControlError) -> Response {
    let (status, code) = match err.code() {
        Some(ErrorCode::UnknownTag) => (StatusCode::NOT_FOUND, "unknown_tag"),
        Some(ErrorCode::TypeMismatch) => (StatusCode::UNPROCESSABLE_ENTITY, "type_mismatch"),
        Some(ErrorCode::InvalidValue) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_value"),
        Some(other) => (StatusCode::BAD_GATEWAY, other.as_str()),
        None => (StatusCode::BAD_GATEWAY, "control_plane_unreachable"),
    };
    (status, Json(json!({"ok": false, "error": code, "detail": err.to_string()}))).into_response()
}

async fn blocking<T, F>(f: F) -> Result<T, Response>
where
    F: FnOnce() -> Result<T, ControlError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(error_response(e)),
        Err(_) => Err(StatusCode::INTERNAL_SERVER_ERROR.into_response()),
    }
}

async fn list_vars(State(s): State<GatewayState>) -> Response {
    let client = s.client;
    match blocking(move || client.list()).await {
        Ok(entries) => Json(
            entries
                .into_iter()
                .map(|e| VarView {
                    tag: e.tag,
                    kind: e.kind.to_string(),
                    value: e.value.map(|v| v.to_json()),
                    port: e.port,
                })
                .collect::<Vec<_>>(),
        )
        .into_response(),
        Err(r) => r,
    }
}

async fn get_var(State(s): State<GatewayState>, Path(tag): Path<String>) -> Response {
    let client = s.client;
    let t = tag.clone();
    match blocking(move || client.get(&t)).await {
        Ok((value, kind)) => Json(json!({"tag": tag, "value": value.to_json(), "type": kind.as_str()})).into_response(),
        Err(r) => r,
    }
}

async fn put_var(State(s): State<GatewayState>, Path(tag): Path<String>, Json(body): Json<PutBody>) -> Response {
    let value = match LiveValue::from_json(&body.value) {
        Ok(v) => v,
        Err(e) => return error_response(e.into()),
    };
    let client = s.client;
    match blocking(move || client.set_value(&tag, value)).await {
        Ok(_) => Json(json!({"ok": true})).into_response(),
        Err(r) => r,
    }
}

async fn fire_trigger(State(s): State<GatewayState>, Path(tag): Path<String>) -> Response {
    let client = s.client;
    match blocking(move || client.fire(&tag)).await {
        Ok(_) => Json(json!({"ok": true})).into_response(),
        Err(r) => r,
    }
}

/// Replays the buffered events, then follows live ones. A client that falls
/// more than the per-client queue behind is disconnected.
pub fn event_stream(bus: &TelemetryBus) -> impl Stream<Item = MetricEvent> + Send + 'static {
    let (replay, rx) = bus.subscribe();
    let live = BroadcastStream::new(rx).map_while(Result::ok);
    tokio_stream::iter(replay).chain(live)
}

async fn stream_metrics(State(s): State<GatewayState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let events = event_stream(&s.bus).map(|e| {
        Ok(Event::default().data(serde_json::to_string(&e).expect("metric events serialize")))
    });
    Sse::new(events).keep_alive(KeepAlive::new().interval(HEARTBEAT))
}

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER_PAGE)
}

const PLACEHOLDER_PAGE: &str = r#"<!doctype html>
<html><head><meta charset="utf-8"><title>livetune</title></head>
<body>
<h1>livetune gateway</h1>
<p>Dashboard assets are not installed. Start the demo with <code>--static-dir</code> to serve them.</p>
<ul>
<li><a href="/api/vars">GET /api/vars</a></li>
<li>GET /api/vars/{tag}, PUT /api/vars/{tag} with <code>{"value": ...}</code></li>
<li>POST /api/triggers/{tag}</li>
<li><a href="/api/metrics/stream">GET /api/metrics/stream</a> (server-sent events)</li>
</ul>
</body></html>
"#;

/// A gateway running on its own runtime thread; dropping it shuts the
/// server down.
pub struct GatewayHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl GatewayHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for GatewayHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `config.bind` and serves on a background thread.
pub fn spawn(config: GatewayConfig, bus: TelemetryBus) -> std::io::Result<GatewayHandle> {
    let std_listener = std::net::TcpListener::bind(config.bind)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let state = GatewayState {
        client: ControlClient::new(config.dict_port),
        bus,
    };
    let app = router(state, config.static_dir);
    let (tx, rx) = oneshot::channel::<()>();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let thread = thread::Builder::new().name("livetune-gateway".into()).spawn(move || {
        runtime.block_on(async move {
            let listener = match tokio::net::TcpListener::from_std(std_listener) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("gateway: {e}");
                    return;
                }
            };
            let served = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = served.await {
                eprintln!("gateway: {e}");
            }
        });
        // Open SSE connections would otherwise keep the runtime alive.
        runtime.shutdown_timeout(Duration::from_millis(100));
    })?;
    Ok(GatewayHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
