//! Annotation service: task queue, label capture, agreement, adjudication
//! and gold export over a file-backed journal.

pub mod api;
pub mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use solidarity_core::extraction::{parse_instances_jsonl, Instance};
use thiserror::Error;
use tower_http::services::ServeDir;

pub use api::{router, AppState};
pub use store::{GoldStore, Recovery, StoreError};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    /// Journal and snapshot directory.
    pub data_dir: PathBuf,
    pub instances_path: PathBuf,
    pub runs_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub tokens: Option<BTreeMap<String, String>>,
    pub snapshot_every: u64,
}

pub fn load_instances(path: &Path) -> Result<BTreeMap<String, Instance>, ServeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ServeError::Input { path: path.to_path_buf(), message: e.to_string() })?;
    let list = parse_instances_jsonl(&text).map_err(|(line, message)| ServeError::Input {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    })?;
    Ok(list.into_iter().map(|i| (i.id.clone(), i)).collect())
}

/// Opens the store and builds the application router.
pub fn build(opts: &ServeOptions) -> Result<(axum::Router, Recovery), ServeError> {
    let instances = load_instances(&opts.instances_path)?;
    let (store, recovery) = GoldStore::open(&opts.data_dir, opts.snapshot_every)?;
    let state = AppState {
        store: Arc::new(RwLock::new(store)),
        instances: Arc::new(instances),
        runs_dir: opts.runs_dir.clone(),
        tokens: opts.tokens.clone().map(Arc::new),
    };
    let mut app = router(state);
    if let Some(dir) = &opts.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    Ok((app, recovery))
}

/// Serves until ctrl-c. `on_ready` receives the bound address.
pub async fn serve(opts: ServeOptions, on_ready: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    let (app, recovery) = build(&opts)?;
    tracing::info!(?recovery, "store opened");
    let listener = tokio::net::TcpListener::bind(opts.addr)
        .await
        .map_err(|source| ServeError::Bind { addr: opts.addr, source })?;
    let addr = listener.local_addr().map_err(ServeError::Server)?;
    on_ready(addr);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
