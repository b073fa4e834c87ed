use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use tokio::sync::broadcast;
use woz_core::protocol::ClientRegistry;
use woz_core::session::SessionError;
use woz_core::{
    Clock, ErrorRepository, LogStore, PredictionEvent, Session, SessionSnapshot, SessionSummary, WireMessage,
};

use crate::config::ServiceConfig;
use crate::prototype::PrototypeRegistry;

const CONSOLE_BUFFER: usize = 1024;

/// Frame pushed to consoles before live frames: the full session state.
#[derive(Serialize)]
struct SnapshotFrame<'a> {
    #[serde(rename = "type")]
    ty: &'static str,
    session: &'a SessionSnapshot,
}

pub fn snapshot_frame(snapshot: &SessionSnapshot) -> String {
    let mut s = serde_json::to_string(&SnapshotFrame {
        ty: "snapshot",
        session: snapshot,
    })
    .expect("snapshot serializes");
    s.push('\n');
    s
}

fn frame_text(msg: &WireMessage) -> Arc<str> {
    Arc::from(String::from_utf8(msg.encode()).expect("frames are UTF-8"))
}

/// A live session plus its console fan-out.
///
/// The tokio mutex is fair, so concurrent requests against one session are
/// applied one at a time in arrival order. Frames are published while the
/// lock is held, which keeps every subscriber's view in seq order.
pub struct SessionHandle {
    session: tokio::sync::Mutex<Session>,
    console: broadcast::Sender<Arc<str>>,
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        let (console, _) = broadcast::channel(CONSOLE_BUFFER);
        Self {
            session: tokio::sync::Mutex::new(session),
            console,
        }
    }

    pub async fn lock(&self) -> tokio::sync::MutexGuard<'_, Session> {
        self.session.lock().await
    }

    /// Snapshot frame plus a receiver positioned right after it.
    pub async fn subscribe(&self) -> (String, broadcast::Receiver<Arc<str>>) {
        let session = self.session.lock().await;
        let rx = self.console.subscribe();
        (snapshot_frame(&session.snapshot()), rx)
    }

    fn publish(&self, msg: &WireMessage) {
        // No subscribers is not an error.
        let _ = self.console.send(frame_text(msg));
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    pub repositories: RwLock<HashMap<String, Arc<ErrorRepository>>>,
    pub sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    pub prototypes: PrototypeRegistry,
    pub logs: LogStore,
    pub clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        let logs = LogStore::new(config.log_dir());
        Self {
            config,
            repositories: RwLock::default(),
            sessions: RwLock::default(),
            prototypes: Arc::new(Mutex::new(ClientRegistry::new())),
            logs,
            clock,
        }
    }

    /// Loads every `*.csv` in the repository directory; invalid files are
    /// skipped with a warning.
    pub fn load_repositories(&self) -> anyhow::Result<usize> {
        let dir = self.config.repository_dir();
        let mut loaded = 0;
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(name) = path.file_stem().and_then(|s| s.to_str()).map(String::from) else {
                continue;
            };
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            match ErrorRepository::parse(name.clone(), &std::fs::read(&path)?) {
                Ok(repo) => {
                    self.repositories.write().expect("lock").insert(name, Arc::new(repo));
                    loaded += 1;
                }
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping invalid repository"),
            }
        }
        Ok(loaded)
    }

    pub fn repository(&self, name: &str) -> Option<Arc<ErrorRepository>> {
        self.repositories.read().expect("lock").get(name).cloned()
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.read().expect("lock").get(id).cloned()
    }

    /// Registers a freshly created session and announces it. `None` when the
    /// id is already taken.
    pub fn insert_session(&self, session: Session) -> Option<Arc<SessionHandle>> {
        let id = session.config().session_id.clone();
        let mut sessions = self.sessions.write().expect("lock");
        if sessions.contains_key(&id) {
            return None;
        }
        let start = WireMessage::session_start(session.config());
        let handle = Arc::new(SessionHandle::new(session));
        sessions.insert(id, handle.clone());
        drop(sessions);
        self.prototypes.lock().expect("registry lock").broadcast(&start);
        handle.publish(&start);
        Some(handle)
    }

    pub fn broadcast_prediction(
        &self,
        handle: &SessionHandle,
        event: &PredictionEvent,
        expose_correctness: bool,
    ) -> usize {
        handle.publish(&WireMessage::prediction(event, true));
        self.prototypes
            .lock()
            .expect("registry lock")
            .broadcast_event(event, expose_correctness)
    }

    pub fn broadcast_end(&self, handle: &SessionHandle, summary: &SessionSummary) {
        let msg = WireMessage::session_end(&summary.session_id, summary.final_accuracy);
        handle.publish(&msg);
        self.prototypes.lock().expect("registry lock").broadcast(&msg);
    }
}

pub type SharedState = Arc<AppState>;

/// Convenience for handlers: run a session mutation under its lock.
pub async fn with_session<T>(
    handle: &SessionHandle,
    f: impl FnOnce(&mut Session) -> Result<T, SessionError>,
) -> Result<T, SessionError> {
    let mut guard = handle.lock().await;
    f(&mut guard)
}
