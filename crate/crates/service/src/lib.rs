//! HTTP API, console push channel, prototype listener and CLI for the
//! Wizard-of-Oz toolkit in `woz-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod prototype;
pub mod push;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::task::JoinHandle;
use woz_core::{Clock, SystemClock};

pub use config::ServiceConfig;
pub use state::{AppState, SharedState};

/// A running service. Dropping it does not stop the tasks; call
/// [`Running::shutdown`].
pub struct Running {
    pub http_addr: SocketAddr,
    pub prototype_addr: SocketAddr,
    pub state: SharedState,
    http: JoinHandle<()>,
    prototype: JoinHandle<()>,
}

impl Running {
    pub fn shutdown(self) {
        self.http.abort();
        self.prototype.abort();
    }

    /// Waits until the HTTP server stops (it only stops on error or abort).
    pub async fn wait(self) {
        let _ = self.http.await;
        self.prototype.abort();
    }
}

/// Validates the config, loads stored repositories and binds both listeners.
pub async fn start(config: ServiceConfig) -> anyhow::Result<Running> {
    start_with_clock(config, Arc::new(SystemClock)).await
}

pub async fn start_with_clock(config: ServiceConfig, clock: Arc<dyn Clock>) -> anyhow::Result<Running> {
    config.validate()?;
    let state: SharedState = Arc::new(AppState::new(config.clone(), clock));
    let loaded = state.load_repositories()?;

    let http_listener = TcpListener::bind(config.http_bind).await?;
    let proto_listener = TcpListener::bind(config.prototype_bind).await?;
    let http_addr = http_listener.local_addr()?;
    let prototype_addr = proto_listener.local_addr()?;
    tracing::info!(%http_addr, %prototype_addr, repositories = loaded, data = %config.data_dir.display(), "listening");

    let app = api::router(state.clone());
    let http = tokio::spawn(async move {
        if let Err(e) = axum::serve(http_listener, app).await {
            tracing::error!(error = %e, "HTTP server failed");
        }
    });
    let prototype = tokio::spawn(prototype::accept_loop(
        proto_listener,
        state.prototypes.clone(),
        config.write_timeout,
    ));
    Ok(Running {
        http_addr,
        prototype_addr,
        state,
        http,
        prototype,
    })
}
