//! Console push channel: a websocket per subscriber.
//!
//! The first frame is a `snapshot` of the whole session, then every
//! `prediction` and `session_end` frame in seq order. A console that falls
//! more than the buffer behind is disconnected and re-syncs by reconnecting.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use tokio::sync::broadcast::error::RecvError;

use crate::api::ApiError;
use crate::state::SharedState;

pub async fn console_socket(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let handle = state.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    Ok(ws.on_upgrade(move |socket| async move {
        let (snapshot, rx) = handle.subscribe().await;
        run(socket, snapshot, rx, id).await;
    }))
}

async fn run(
    mut socket: WebSocket,
    snapshot: String,
    mut rx: tokio::sync::broadcast::Receiver<std::sync::Arc<str>>,
    id: String,
) {
    if socket.send(Message::Text(snapshot.into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            frame = rx.recv() => match frame {
                Ok(text) => {
                    if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                Err(RecvError::Lagged(n)) => {
                    tracing::warn!(session = %id, skipped = n, "console lagged, closing");
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
                Err(RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
