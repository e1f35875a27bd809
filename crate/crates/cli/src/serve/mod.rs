//! HTTP curation API consumed by the inspector.

mod api;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::{router, App};
pub use store::{
    apply_move, AtomStatus, CurationRecord, Edit, GraphEdit, LayoutEdit, Move, ResolveRequest, ScenarioView, Status,
    StatusChange, Store, StoreError, Summary,
};

use crate::config::EngineConfig;
use crate::error::CliError;
use crate::run::RunDir;

/// Serves the run directory until ctrl-c.
pub fn serve(cfg: EngineConfig, run: RunDir, addr: SocketAddr) -> Result<(), CliError> {
    let store = Store::open(run, cfg)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Validation(format!("runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Validation(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on {}", listener.local_addr().map_or(addr, |a| a));
        axum::serve(listener, router(Arc::new(store)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Validation(format!("server: {e}")))
    })
}
