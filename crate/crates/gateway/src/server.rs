//! HTTP and WebSocket routes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chair_core::sim::{CommandKind, Motion};
use futures::{SinkExt, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::RwLock;

use crate::catalog::Catalog;
use crate::config::GatewayConfig;
use crate::error::GatewayError;
use crate::owner::SessionHandle;
use crate::session::{IntentTarget, Mode, Recording, Session, SessionConfig};
use crate::telemetry::Hub;

/// Requests without this header share one sequence counter.
pub const CLIENT_HEADER: &str = "x-client-id";
const DEFAULT_CLIENT: &str = "default";

#[derive(Debug, Deserialize)]
struct CommandBody {
    cmd: CommandKind,
    seq: i64,
}

#[derive(Debug, Serialize)]
struct CommandReply {
    accepted: bool,
    state: Motion,
}

#[derive(Debug, Deserialize)]
struct IntentBody {
    target: IntentTarget,
}

/// Body of `POST /session`. A replay takes its configuration from the
/// recording; a live session needs `profile` and `map`.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct SessionRequest {
    pub profile: Option<String>,
    pub map: Option<String>,
    pub seed: u64,
    pub mode: Mode,
    pub noise_free_sensors: bool,
    pub time_scale: Option<f64>,
    pub recording: Option<Recording>,
}

struct Active {
    handle: SessionHandle,
    /// Highest accepted seq per client.
    seqs: Mutex<HashMap<String, i64>>,
}

pub struct AppState {
    config: GatewayConfig,
    catalog: Arc<Catalog>,
    hub: Hub,
    active: RwLock<Option<Arc<Active>>>,
}

impl AppState {
    pub fn new(config: GatewayConfig, catalog: Catalog) -> Arc<Self> {
        let hub = Hub::new(config.telemetry.critical_capacity, config.telemetry.bulk_capacity);
        Arc::new(Self { config, catalog: Arc::new(catalog), hub, active: RwLock::new(None) })
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Build and start a session, replacing any running one.
    pub async fn start_session(&self, req: SessionRequest) -> Result<SessionConfig, GatewayError> {
        let time_scale = req.time_scale.unwrap_or(self.config.time_scale);
        if !(time_scale.is_finite() && time_scale > 0.0) {
            return Err(GatewayError::Config("time_scale must be > 0".into()));
        }
        let catalog = self.catalog.clone();
        let session = tokio::task::spawn_blocking(move || -> Result<Session, GatewayError> {
            match req.mode {
                Mode::Replay => Session::replay(req.recording.ok_or(GatewayError::MissingRecording)?, &catalog),
                Mode::LiveSim => {
                    let missing = |what: &str| GatewayError::Config(format!("live session needs `{what}`"));
                    let config = SessionConfig {
                        profile: req.profile.ok_or_else(|| missing("profile"))?,
                        map: req.map.ok_or_else(|| missing("map"))?,
                        seed: req.seed,
                        mode: Mode::LiveSim,
                        noise_free_sensors: req.noise_free_sensors,
                    };
                    Session::live(config, &catalog)
                }
            }
        })
        .await
        .expect("session construction does not panic")?;
        let config = session.config().clone();
        let handle = SessionHandle::spawn(session, time_scale, self.hub.clone());
        *self.active.write().await = Some(Arc::new(Active { handle, seqs: Mutex::new(HashMap::new()) }));
        tracing::info!(?config, time_scale, "session started");
        Ok(config)
    }

    pub async fn stop_session(&self) -> bool {
        self.active.write().await.take().is_some()
    }

    async fn active(&self) -> Result<Arc<Active>, Response> {
        self.active.read().await.clone().ok_or_else(|| error(StatusCode::SERVICE_UNAVAILABLE, "no active session"))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/command", post(post_command))
        .route("/intent", post(post_intent))
        .route("/state", get(get_state))
        .route("/telemetry", get(telemetry))
        .route("/session", get(get_session).post(post_session).delete(delete_session))
        .route("/session/recording", get(get_recording))
        .route("/catalog", get(get_catalog))
        .with_state(state)
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

fn gateway_error(e: GatewayError) -> Response {
    let status = match e {
        GatewayError::UnknownProfile(_)
        | GatewayError::UnknownMap(_)
        | GatewayError::MissingRecording
        | GatewayError::Config(_) => StatusCode::BAD_REQUEST,
        GatewayError::Replaying => StatusCode::CONFLICT,
        GatewayError::SessionEnded => StatusCode::SERVICE_UNAVAILABLE,
        GatewayError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

async fn post_command(State(app): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    let body: CommandBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let active = match app.active().await {
        Ok(a) => a,
        Err(r) => return r,
    };
    let client = headers.get(CLIENT_HEADER).and_then(|v| v.to_str().ok()).unwrap_or(DEFAULT_CLIENT).to_string();
    {
        let mut seqs = active.seqs.lock().expect("seq table");
        if seqs.get(&client).is_some_and(|&last| body.seq <= last) {
            let state = active.handle.snapshot().motion;
            return (StatusCode::CONFLICT, Json(CommandReply { accepted: false, state })).into_response();
        }
        seqs.insert(client, body.seq);
    }
    match active.handle.command(body.cmd, Some(body.seq)).await {
        Ok(o) => Json(CommandReply { accepted: o.accepted, state: o.motion }).into_response(),
        Err(e) => gateway_error(e),
    }
}

async fn post_intent(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let body: IntentBody = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let active = match app.active().await {
        Ok(a) => a,
        Err(r) => return r,
    };
    match active.handle.intent(body.target).await {
        Ok(()) => Json(json!({ "ok": true })).into_response(),
        Err(e) => gateway_error(e),
    }
}

async fn get_state(State(app): State<Arc<AppState>>) -> Response {
    match app.active().await {
        Ok(a) => Json(a.handle.snapshot()).into_response(),
        Err(r) => r,
    }
}

async fn get_session(State(app): State<Arc<AppState>>) -> Response {
    let active = match app.active().await {
        Ok(a) => a,
        Err(r) => return r,
    };
    match active.handle.info().await {
        Ok(info) => Json(info).into_response(),
        Err(e) => gateway_error(e),
    }
}

async fn post_session(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: SessionRequest = match parse(&body) {
        Ok(b) => b,
        Err(r) => return r,
    };
    match app.start_session(req).await {
        Ok(config) => (StatusCode::CREATED, Json(config)).into_response(),
        Err(e) => gateway_error(e),
    }
}

async fn delete_session(State(app): State<Arc<AppState>>) -> Response {
    if app.stop_session().await {
        StatusCode::NO_CONTENT.into_response()
    } else {
        error(StatusCode::NOT_FOUND, "no active session")
    }
}

async fn get_recording(State(app): State<Arc<AppState>>) -> Response {
    let active = match app.active().await {
        Ok(a) => a,
        Err(r) => return r,
    };
    match active.handle.recording().await {
        Ok(rec) => Json(rec).into_response(),
        Err(e) => gateway_error(e),
    }
}

async fn get_catalog(State(app): State<Arc<AppState>>) -> Response {
    Json(json!({ "profiles": app.catalog.profile_ids(), "maps": app.catalog.map_ids() })).into_response()
}

async fn telemetry(State(app): State<Arc<AppState>>, ws: WebSocketUpgrade) -> Response {
    if let Err(r) = app.active().await {
        return r;
    }
    let sub = app.hub.subscribe();
    ws.on_upgrade(move |socket| stream_telemetry(socket, sub))
}

async fn stream_telemetry(socket: WebSocket, mut sub: crate::telemetry::Subscriber) {
    let (mut sink, mut incoming) = socket.split();
    loop {
        tokio::select! {
            frame = sub.next() => {
                let Some(frame) = frame else { break };
                if sink.send(Message::Text(frame.as_ref().into())).await.is_err() {
                    break;
                }
            }
            msg = incoming.next() => {
                match msg {
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                }
            }
        }
    }
}
