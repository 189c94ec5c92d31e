//! HTTP surface: `GET /health` and the `/session` WebSocket.

use std::future::Future;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use darkwand_core::classify::Classifier;
use darkwand_core::dataset::label_to_letter;
use darkwand_core::Model;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::protocol::ServerMessage;
use crate::session::Session;

/// Model metadata returned by `GET /health`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub algorithm: String,
    pub classes: Vec<u8>,
    pub letters: Vec<char>,
    pub dim: usize,
}

impl Health {
    pub fn for_model(model: &Model) -> Self {
        Health {
            status: "ok".into(),
            algorithm: model.algorithm().tag().into(),
            classes: model.classes().to_vec(),
            letters: model.classes().iter().map(|&c| label_to_letter(c).unwrap_or('?')).collect(),
            dim: model.dim(),
        }
    }
}

/// Shared read-only state; each connection gets its own [`Session`].
#[derive(Clone)]
pub struct AppState {
    pub model: Arc<Model>,
    pub health: Arc<Health>,
}

pub fn router(model: Arc<Model>) -> Router {
    let health = Arc::new(Health::for_model(&model));
    Router::new()
        .route("/health", get(health_handler))
        .route("/session", get(session_handler))
        .with_state(AppState { model, health })
}

/// Serves until `shutdown` resolves, then drains open connections.
pub async fn serve(listener: TcpListener, model: Arc<Model>, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(model)).with_graceful_shutdown(shutdown).await
}

async fn health_handler(State(state): State<AppState>) -> Json<Health> {
    Json((*state.health).clone())
}

async fn session_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, state.model))
}

async fn run_session(mut socket: WebSocket, model: Arc<Model>) {
    let mut session = Session::new(model);
    log::debug!("session opened");
    while let Some(Ok(msg)) = socket.recv().await {
        let replies = match msg {
            Message::Text(text) => session.handle_text(text.as_str()),
            Message::Binary(_) => vec![ServerMessage::protocol("binary frames are not supported")],
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        for reply in replies {
            if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
                return;
            }
        }
    }
    log::debug!("session closed");
}
