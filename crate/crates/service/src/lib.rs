//! HTTP service and shared plumbing for the `glyphplan` command.

pub mod api;
pub mod config;
pub mod store;
pub mod transport;

use std::sync::Arc;

use glyphplan_core::planner::{BackendConfig, BackendPlanner, HeuristicPlanner, LayoutPlanner};
use glyphplan_core::tokenizer::Vocabulary;

pub use api::{router, AppState};
pub use config::ServiceConfig;
use store::SessionStore;
use transport::HttpTransport;

pub fn backend_planner(config: BackendConfig) -> Arc<dyn LayoutPlanner> {
    Arc::new(BackendPlanner::new(config, HttpTransport::default()))
}

/// Application state for `config`, restoring sessions from the snapshot
/// when one exists.
pub fn build_state(config: &ServiceConfig) -> anyhow::Result<AppState> {
    config.validate()?;
    Ok(AppState {
        store: Arc::new(SessionStore::new(config.capacity, config.snapshot.clone())?),
        heuristic: Arc::new(HeuristicPlanner),
        backend: config.backend.clone().map(backend_planner),
        vocab: Arc::new(Vocabulary::default_with(config.angle_tokens)),
        canvas: config.canvas,
    })
}

/// Binds and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = build_state(&config)?;
    let app = router(state, &config);
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {}: {e}", config.bind))?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
