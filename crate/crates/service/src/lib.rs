//! HTTP/JSON front end for medication search and medication-history capture.
//!
//! | method | path                                      | body                         |
//! |--------|-------------------------------------------|------------------------------|
//! | GET    | `/medications?q=`                         | `[{med_list_id, med_name}]`  |
//! | GET    | `/medications/{id}/common-forms`          | [`CommonFormsResponse`]      |
//! | GET    | `/medications/{id}/dose-units`            | `["MG", …, "Other Units"]`   |
//! | GET    | `/frequencies`                            | `[{code, display}]`          |
//! | POST   | `/patients/{ref}/medication-history`      | [`CreatedResponse`] (201)    |
//! | GET    | `/patients/{ref}/medication-history`      | `[StoredEntryRecord]`        |

mod api;
mod journal;

use std::io;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;
use tokio::net::TcpListener;

use rxhistory_core::capture::FrequencyVocabulary;
use rxhistory_core::compile::{CompiledTerminology, TableError};
use rxhistory_core::search::{CacheState, DEFAULT_CACHE_TTL, DEFAULT_SUGGEST_LIMIT};

pub use api::{
    router, AppState, CommonFormView, CommonFormsResponse, CreatedResponse, ErrorResponse, ViolationsResponse,
};
pub use journal::{encode_record, parse_record, Journal, JournalError, StoredEntryRecord};

pub const DEFAULT_PORT: u16 = 8080;
/// Journal file name inside the data directory unless configured otherwise.
pub const JOURNAL_FILE: &str = "medication_history.ndjson";

#[derive(Debug, Clone)]
pub struct ApiConfig {
    /// Directory holding the compiled tables and manifest.
    pub data_dir: PathBuf,
    pub listen_port: u16,
    pub cache_ttl: Duration,
    pub suggest_limit: usize,
    /// Defaults to [`JOURNAL_FILE`] inside `data_dir`.
    pub journal_path: Option<PathBuf>,
    pub vocabulary: FrequencyVocabulary,
}

impl ApiConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ApiConfig {
            data_dir: data_dir.into(),
            listen_port: DEFAULT_PORT,
            cache_ttl: DEFAULT_CACHE_TTL,
            suggest_limit: DEFAULT_SUGGEST_LIMIT,
            journal_path: None,
            vocabulary: FrequencyVocabulary::default(),
        }
    }

    pub fn journal_path(&self) -> PathBuf {
        self.journal_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join(JOURNAL_FILE))
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("data directory {dir}: {source}")]
    Data {
        dir: PathBuf,
        #[source]
        source: TableError,
    },
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("cannot listen on port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: io::Error,
    },
    #[error("server error: {0}")]
    Server(#[source] io::Error),
}

/// Load the tables and replay the journal.
pub fn load_state(config: &ApiConfig) -> Result<Arc<AppState>, ServeError> {
    let terminology = CompiledTerminology::read_tables(&config.data_dir).map_err(|source| ServeError::Data {
        dir: config.data_dir.clone(),
        source,
    })?;
    let journal = Journal::open(&config.journal_path())?;
    Ok(Arc::new(AppState::new(
        terminology,
        CacheState::new(config.cache_ttl),
        config.vocabulary.clone(),
        journal,
        config.suggest_limit,
    )))
}

pub async fn bind(port: u16) -> Result<TcpListener, ServeError> {
    TcpListener::bind(SocketAddr::from((Ipv4Addr::UNSPECIFIED, port)))
        .await
        .map_err(|source| ServeError::Bind { port, source })
}

/// Serve until `shutdown` resolves.
pub async fn serve_with_shutdown(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServeError::Server)
}

/// Load, bind and serve until Ctrl-C.
pub async fn serve(config: ApiConfig) -> Result<(), ServeError> {
    let state = load_state(&config)?;
    let listener = bind(config.listen_port).await?;
    log::info!(
        "serving {} medications on {}",
        state.terminology.med_list().len(),
        listener.local_addr().map_err(ServeError::Server)?
    );
    serve_with_shutdown(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
