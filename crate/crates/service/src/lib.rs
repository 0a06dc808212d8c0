//! Interactive coaching over HTTP: a person plays the feedback source of the
//! grounded search, one session per coaching run.

pub mod api;
pub mod models;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, CreateSession, FeedbackRequest, FeedbackResponse};
pub use models::{LoadedModel, ModelInfo, ModelRegistry};
pub use session::{decimate, replay, step, HistoryEntry, Session, Status, TrajectoryView};
pub use store::{load_session, Store};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_sessions: usize,
    pub idle_timeout_ms: u64,
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { max_sessions: 64, idle_timeout_ms: 30 * 60 * 1000, cors_origin: None }
    }
}

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    })
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<ModelRegistry>,
    pub store: Arc<Store>,
    pub config: Arc<ServiceConfig>,
    pub clock: Clock,
    /// Serializes session creation so the session limit holds.
    pub create_lock: Arc<tokio::sync::Mutex<()>>,
}

impl AppState {
    pub fn new(registry: ModelRegistry, store: Store, config: ServiceConfig, clock: Clock) -> Self {
        AppState {
            registry: Arc::new(registry),
            store: Arc::new(store),
            config: Arc::new(config),
            clock,
            create_lock: Arc::default(),
        }
    }

    pub fn now(&self) -> u64 {
        (self.clock)()
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub model_dir: PathBuf,
    pub data_dir: Option<PathBuf>,
    pub config: ServiceConfig,
}

/// Loads models and sessions, then serves until the process ends.
pub async fn serve(opts: ServeOptions) -> std::io::Result<()> {
    let registry = ModelRegistry::scan(&opts.model_dir)?;
    if registry.is_empty() {
        log::warn!("no usable models in {}", opts.model_dir.display());
    }
    let store = Store::open(opts.data_dir.as_deref())?;
    let state = AppState::new(registry, store, opts.config, system_clock());
    let listener = tokio::net::TcpListener::bind(opts.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
