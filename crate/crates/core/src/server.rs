//! HTTP and WebSocket front end: one session per `/ws` connection.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};

use crate::protocol::ClientMessage;
use crate::session::{EngineConfig, Session};

/// Script served at `/overlay.js` unless another bundle is supplied.
pub const DEFAULT_OVERLAY_JS: &str = include_str!("../assets/overlay.js");

pub struct ServerState {
    pub config: EngineConfig,
    pub overlay_js: String,
    next_session: AtomicU64,
}

impl ServerState {
    pub fn new(config: EngineConfig, overlay_js: Option<String>) -> Self {
        Self {
            config,
            overlay_js: overlay_js.unwrap_or_else(|| DEFAULT_OVERLAY_JS.to_string()),
            next_session: AtomicU64::new(1),
        }
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/overlay.js", get(overlay))
        .route("/ws", get(upgrade))
        .with_state(state)
}

async fn overlay(State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "application/javascript; charset=utf-8")],
        state.overlay_js.clone(),
    )
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_session(socket, state))
}

fn now_ms() -> i64 {
    chrono::Utc::now().timestamp_millis()
}

async fn run_session(socket: WebSocket, state: Arc<ServerState>) {
    let n = state.next_session.fetch_add(1, Ordering::Relaxed);
    let mut session = Session::new(format!("ws{n}"), state.config.clone());
    log::info!("session {} opened", session.session_id());
    let (mut tx, mut rx) = socket.split();

    // Messages are handled one at a time, so a session never sees interleaved input.
    while let Some(frame) = rx.next().await {
        let text = match frame {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Binary(b)) => String::from_utf8_lossy(&b).into_owned(),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let replies = match serde_json::from_str::<ClientMessage>(&text) {
            Ok(msg) => session.handle(msg, now_ms()),
            Err(e) => vec![session.reject(&e.to_string())],
        };
        for reply in replies {
            if tx.send(Message::Text(reply.to_json_string().into())).await.is_err() {
                log::info!("session {} lost its socket", session.session_id());
                return;
            }
        }
    }
    log::info!("session {} closed", session.session_id());
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<ServerState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
