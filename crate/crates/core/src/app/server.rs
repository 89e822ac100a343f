//! Read-only JSON API over a populated store, plus optional static assets.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use lru::LruCache;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::set_header::SetResponseHeaderLayer;

use super::comparison::comparison_at;
use super::AppError;
use crate::model::{rfc3339, SimilarityConfig, Timestamp};
use crate::store::{encode_document, PairId, PairSummary, Store, StoreError, SCHEMA_VERSION};
use crate::timeline::SnapshotPlan;

pub const SCHEMA_HEADER: &str = "x-schema-version";
const DEFAULT_CACHE_ENTRIES: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub address: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    /// Allowed origins; empty allows any.
    pub cors_allowlist: Vec<String>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, port: u16) -> Result<Self, AppError> {
        if port == 0 {
            return Err(AppError::user("InvalidPort", "port must be in 1..=65535"));
        }
        Ok(Self {
            address: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port,
            data_dir: data_dir.into(),
            static_dir: None,
            cors_allowlist: Vec::new(),
        })
    }

    pub fn socket_addr(&self) -> SocketAddr {
        SocketAddr::new(self.address, self.port)
    }
}

/// Pair metadata with its plan and the stored report times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDetail {
    #[serde(flatten)]
    pub summary: PairSummary,
    pub config: SimilarityConfig,
    pub plan: SnapshotPlan,
    pub report_times: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Clone)]
pub struct ApiState {
    store: Arc<Store>,
    cache: Arc<Mutex<LruCache<String, Arc<str>>>>,
}

impl ApiState {
    pub fn new(store: Store) -> Self {
        let cap = NonZeroUsize::new(DEFAULT_CACHE_ENTRIES).expect("nonzero");
        Self { store: Arc::new(store), cache: Arc::new(Mutex::new(LruCache::new(cap))) }
    }

    fn cached(&self, key: String, build: impl FnOnce(&Store) -> Result<String, ApiError>) -> Result<Arc<str>, ApiError> {
        if let Some(hit) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let body: Arc<str> = build(&self.store)?.into();
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).put(key, body.clone());
        Ok(body)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.to_owned(), message: message.into() } }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) | StoreError::InvalidPairId(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        let status = match e.code.as_str() {
            "NotFound" | "InvalidPairId" => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, &e.code, e.message)
    }
}

fn json_response(status: StatusCode, body: impl Into<axum::body::Body>) -> Response {
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body.into()).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_string(&self.body).expect("error body serializes");
        json_response(self.status, body)
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(body: Arc<str>) -> ApiResult {
    Ok(json_response(StatusCode::OK, body.to_string()))
}

fn parse_pair(id: &str) -> Result<PairId, ApiError> {
    PairId::parse(id).map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown pair {id:?}")))
}

fn known_pair(store: &Store, id: &str) -> Result<PairId, ApiError> {
    let pair = parse_pair(id)?;
    store.get_meta(&pair)?;
    Ok(pair)
}

fn encode<T: Serialize>(doc: &T) -> Result<String, ApiError> {
    encode_document(doc).map_err(ApiError::from)
}

async fn healthz() -> ApiResult {
    Ok(json_response(StatusCode::OK, format!(r#"{{"schema_version":{SCHEMA_VERSION},"status":"ok"}}"#)))
}

async fn list_pairs(State(state): State<ApiState>) -> ApiResult {
    ok(state.cached("pairs".into(), |store| {
        let docs = store.list_pairs()?.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
        Ok(format!("[{}]", docs.join(",")))
    })?)
}

async fn pair_detail(State(state): State<ApiState>, Path(id): Path<String>) -> ApiResult {
    ok(state.cached(format!("pair:{id}"), |store| {
        let pair = known_pair(store, &id)?;
        let meta = store.get_meta(&pair)?;
        let plan = store.get_plan(&pair)?;
        let summary = store
            .list_pairs()?
            .into_iter()
            .find(|s| s.pair_id == pair)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("pair {pair}")))?;
        let report_times = store.report_times(&pair)?.iter().map(rfc3339::format).collect();
        encode(&PairDetail { summary, config: meta.config, plan, report_times })
    })?)
}

async fn pair_timeline(State(state): State<ApiState>, Path(id): Path<String>) -> ApiResult {
    ok(state.cached(format!("timeline:{id}"), |store| {
        let pair = known_pair(store, &id)?;
        store.get_timeline(&pair)?;
        Ok(store.read_raw(&store.timeline_path(&pair))?)
    })?)
}

#[derive(Debug, Deserialize)]
struct TimeQuery {
    time: Option<String>,
}

async fn pair_comparison(State(state): State<ApiState>, Path(id): Path<String>, Query(q): Query<TimeQuery>) -> ApiResult {
    let raw = q.time.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MissingTime", "query parameter `time` is required"))?;
    let time: Timestamp = rfc3339::parse(&raw)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadTime", format!("time {raw:?} is not RFC 3339: {e}")))?;
    ok(state.cached(format!("comparison:{id}:{}", rfc3339::format(&time)), |store| {
        let pair = known_pair(store, &id)?;
        encode(&comparison_at(store, &pair, &time)?)
    })?)
}

fn cors_layer(allowlist: &[String]) -> Result<CorsLayer, AppError> {
    let origin = if allowlist.is_empty() {
        AllowOrigin::any()
    } else {
        let values = allowlist
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| AppError::user("InvalidOrigin", format!("bad CORS origin {o:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(values)
    };
    Ok(CorsLayer::new().allow_origin(origin).allow_methods([Method::GET]))
}

/// The full service router. No route writes to the store.
pub fn router(store: Store, static_dir: Option<PathBuf>, cors_allowlist: &[String]) -> Result<Router, AppError> {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/pairs", get(list_pairs))
        .route("/api/pairs/{id}", get(pair_detail))
        .route("/api/pairs/{id}/timeline", get(pair_timeline))
        .route("/api/pairs/{id}/comparison", get(pair_comparison))
        .with_state(ApiState::new(store));
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    Ok(app
        .layer(SetResponseHeaderLayer::overriding(
            HeaderName::from_static(SCHEMA_HEADER),
            HeaderValue::from_str(&SCHEMA_VERSION.to_string()).expect("ascii"),
        ))
        .layer(cors_layer(cors_allowlist)?))
}

/// Binds and serves until the process is stopped.
pub fn serve(config: &ServiceConfig) -> Result<(), AppError> {
    let store = Store::open_existing(&config.data_dir)?;
    let app = router(store, config.static_dir.clone(), &config.cors_allowlist)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| AppError::environment("Runtime", e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.socket_addr())
            .await
            .map_err(|e| AppError::environment("AddressInUse", format!("cannot bind {}: {e}", config.socket_addr())))?;
        log::info!("serving {} on http://{}", config.data_dir.display(), config.socket_addr());
        axum::serve(listener, app).await.map_err(|e| AppError::environment("Serve", e.to_string()))
    })
}
