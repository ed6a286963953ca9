//! HTTP+JSON API under `/v1`.
//!
//! Handlers authenticate with bearer tokens from `POST /v1/auth/login` and
//! run store and model work on the blocking pool. Responses to control-arm
//! sessions never carry suggestion or imagination fields.

pub mod auth;
pub mod error;
mod routes;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::http::HeaderValue;
use axum::Router;
use chrono::Duration;
use chrono_tz::Tz;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::clock::{Clock, SystemClock};
use crate::ids::{MemoryId, UserId};
use crate::journal::Journal;
use crate::lexicon::{Blocklist, Lexicon};
use crate::llm::LlmConfig;
use crate::pipeline::{PipelineConfig, ValenceScreen};
use crate::store::{Account, Event, Role, Store, StoreError, StoreKey};
use crate::study::{FileOutbox, InstrumentSet, ReminderTransport, StudyConfig};

pub use auth::{hash_password, verify_password, LoginThrottle, PasswordParams, Session, Sessions};
pub use error::ApiError;

pub const LOG_FILE: &str = "events.log";

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub session_ttl: Duration,
    /// Failed logins per username per minute before 429.
    pub login_max_failures: usize,
    pub password: PasswordParams,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            session_ttl: Duration::hours(12),
            login_max_failures: 5,
            password: PasswordParams::default(),
        }
    }
}

/// Outcome remembered for an idempotency key.
#[derive(Debug, Clone)]
pub(crate) enum IdempotentSlot {
    Empty,
    /// The memory is stored but its processing has not finished.
    Stored(MemoryId),
    Done(u16, serde_json::Value),
}

type SlotMap = HashMap<(UserId, String), Arc<tokio::sync::Mutex<IdempotentSlot>>>;

pub struct AppState {
    pub journal: Arc<Journal>,
    pub clock: Arc<dyn Clock>,
    pub config: ApiConfig,
    pub sessions: Sessions,
    pub throttle: LoginThrottle,
    pub outbox: Arc<dyn ReminderTransport>,
    idempotency: Mutex<SlotMap>,
}

impl AppState {
    pub fn new(
        journal: Arc<Journal>,
        clock: Arc<dyn Clock>,
        config: ApiConfig,
        outbox: Arc<dyn ReminderTransport>,
    ) -> Self {
        Self {
            journal,
            clock,
            throttle: LoginThrottle::new(config.login_max_failures),
            config,
            sessions: Sessions::default(),
            outbox,
            idempotency: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        self.journal.store()
    }

    /// Creates a login account. Participants still need enrolling.
    pub fn register_account(&self, user: &UserId, password: &str, role: Role) -> Result<(), ApiError> {
        if user.as_str().trim().is_empty() || password.is_empty() {
            return Err(ApiError::bad_request("username and password are required"));
        }
        let password_hash = hash_password(self.config.password, password).map_err(ApiError::internal)?;
        let account = Account {
            user_id: user.clone(),
            password_hash,
            role,
        };
        self.store().commit(self.clock.now(), |_| {
            Ok::<_, StoreError>(Event::AccountRegistered(account))
        })?;
        Ok(())
    }

    /// Registers the admin account unless it already exists.
    pub fn ensure_admin(&self, user: &UserId, password: &str) -> Result<(), ApiError> {
        if self.store().read(|s| s.accounts.contains_key(user)) {
            return Ok(());
        }
        self.register_account(user, password, Role::Admin)
    }

    pub(crate) fn slot(&self, user: &UserId, key: &str) -> Arc<tokio::sync::Mutex<IdempotentSlot>> {
        self.idempotency
            .lock()
            .expect("idempotency map poisoned")
            .entry((user.clone(), key.to_string()))
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(IdempotentSlot::Empty)))
            .clone()
    }
}

/// The `/v1` routes with permissive CORS for `cors_origin` (any origin if
/// `None`), optionally serving a static web bundle at `/`.
pub fn router(state: Arc<AppState>, cors_origin: Option<HeaderValue>, static_dir: Option<PathBuf>) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match cors_origin {
        Some(origin) => cors.allow_origin(origin),
        None => cors.allow_origin(Any),
    };
    let mut app = Router::new().nest("/v1", routes::v1()).with_state(state).layer(cors);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app
}

/// Server settings read from `REVERIE_*` environment variables.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub store_key: StoreKey,
    pub timezone: Tz,
    pub assignment_seed: u64,
    pub study_days: u32,
    pub admin: Option<(String, String)>,
    pub static_dir: Option<PathBuf>,
    pub cors_origin: Option<String>,
    pub session_ttl: Duration,
    pub lexicon: Option<PathBuf>,
    pub blocklist: Option<PathBuf>,
    pub llm: LlmConfig,
}

impl ServerConfig {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok().filter(|v| !v.is_empty()))
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let parse = |key: &str, default: u64| -> Result<u64, String> {
            get(key).map_or(Ok(default), |v| {
                v.parse().map_err(|_| format!("{key}: not a number: {v}"))
            })
        };
        let store_key = match (get("REVERIE_STORE_KEY"), get("REVERIE_STORE_PASSPHRASE")) {
            (Some(hex), _) => StoreKey::from_hex(&hex)?,
            (None, Some(p)) => StoreKey::from_passphrase(&p),
            (None, None) => return Err("set REVERIE_STORE_KEY (64 hex chars) or REVERIE_STORE_PASSPHRASE".into()),
        };
        let timezone = match get("REVERIE_STUDY_TZ") {
            Some(tz) => tz.parse().map_err(|_| format!("REVERIE_STUDY_TZ: unknown zone {tz}"))?,
            None => Tz::UTC,
        };
        let admin = match (get("REVERIE_ADMIN_USER"), get("REVERIE_ADMIN_PASSWORD")) {
            (Some(u), Some(p)) => Some((u, p)),
            (None, None) => None,
            _ => return Err("REVERIE_ADMIN_USER and REVERIE_ADMIN_PASSWORD go together".into()),
        };
        Ok(Self {
            port: parse("REVERIE_PORT", 8080)?
                .try_into()
                .map_err(|_| "REVERIE_PORT out of range")?,
            data_dir: get("REVERIE_DATA_DIR").map_or_else(|| PathBuf::from("data"), PathBuf::from),
            store_key,
            timezone,
            assignment_seed: parse("REVERIE_ASSIGNMENT_SEED", 0)?,
            study_days: parse("REVERIE_STUDY_DAYS", u64::from(crate::study::DEFAULT_STUDY_DAYS))?
                .try_into()
                .map_err(|_| "REVERIE_STUDY_DAYS out of range")?,
            admin,
            static_dir: get("REVERIE_STATIC_DIR").map(PathBuf::from),
            cors_origin: get("REVERIE_CORS_ORIGIN"),
            session_ttl: Duration::minutes(parse("REVERIE_SESSION_TTL_MINUTES", 720)? as i64),
            lexicon: get("REVERIE_LEXICON").map(PathBuf::from),
            blocklist: get("REVERIE_BLOCKLIST").map(PathBuf::from),
            llm: LlmConfig::from_lookup(&get),
        })
    }
}

/// Opens the store in `data_dir` and wires the application together.
pub fn build_state(config: &ServerConfig) -> Result<Arc<AppState>, String> {
    std::fs::create_dir_all(&config.data_dir).map_err(|e| e.to_string())?;
    let store = Arc::new(Store::open(config.data_dir.join(LOG_FILE), &config.store_key).map_err(|e| e.to_string())?);
    let lexicon = match &config.lexicon {
        Some(p) => Lexicon::load(p).map_err(|e| e.to_string())?,
        None => Lexicon::builtin(),
    };
    let blocklist = match &config.blocklist {
        Some(p) => Blocklist::load(p).map_err(|e| e.to_string())?,
        None => Blocklist::builtin(),
    };
    let screen = ValenceScreen::new(
        Arc::new(lexicon),
        Arc::new(blocklist),
        crate::pipeline::DEFAULT_NEGATIVE_THRESHOLD,
    );
    let study = StudyConfig {
        assignment_seed: config.assignment_seed,
        study_days: config.study_days,
        timezone: config.timezone,
        instruments: InstrumentSet::default(),
    };
    let journal = Journal::new(
        store,
        study,
        Arc::new(config.llm.gateway()),
        screen,
        PipelineConfig::default(),
    );
    let api = ApiConfig {
        session_ttl: config.session_ttl,
        ..ApiConfig::default()
    };
    let state = Arc::new(AppState::new(
        Arc::new(journal),
        Arc::new(SystemClock),
        api,
        Arc::new(FileOutbox::in_dir(&config.data_dir)),
    ));
    if let Some((user, password)) = &config.admin {
        state
            .ensure_admin(&UserId::new(user.clone()), password)
            .map_err(|e| e.message)?;
    }
    Ok(state)
}

pub async fn serve(config: ServerConfig) -> Result<(), String> {
    let state = build_state(&config)?;
    let origin = match &config.cors_origin {
        Some(o) => Some(HeaderValue::from_str(o).map_err(|e| e.to_string())?),
        None => None,
    };
    let app = router(state, origin, config.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", config.port))
        .await
        .map_err(|e| e.to_string())?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
    axum::serve(listener, app).await.map_err(|e| e.to_string())
}
