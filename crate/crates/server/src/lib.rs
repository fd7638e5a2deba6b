//! Read-only JSON API over ingested snapshots.
//!
//! Every response is an [`ApiResponse`] envelope carrying the snapshot it was
//! computed from. Analyses are loaded once per snapshot and shared between
//! requests; ingesting a new snapshot never alters what readers of an older
//! one see.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::num::NonZeroU32;
use std::sync::{Arc, RwLock};

use adtrace_core::analysis::{materialize, AnalysisInputs};
use adtrace_core::crawler::{
    live_fetch_passthrough, CrawlConfig, CrawlSnapshot, FetchStatus, Transport,
};
use adtrace_core::datastore::Datastore;
use adtrace_core::parser::FileKind;
use adtrace_core::tools::{
    corpus_stats, hidden_intermediary_lookup, partnerships, pooling_lookup, relationships,
    validate_domain, verified_hidden_series, Analyzed, CorpusStats,
};
use adtrace_core::Error;
use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{Extensions, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use governor::{DefaultKeyedRateLimiter, Quota, RateLimiter};
use serde::{Deserialize, Serialize};

pub const ADMIN_TOKEN_ENV: &str = "ADTRACE_ADMIN_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApiStatus {
    Ok,
    NotFound,
    InvalidInput,
    UpstreamError,
    RateLimited,
    Unauthorized,
}

impl ApiStatus {
    fn http(self) -> StatusCode {
        match self {
            ApiStatus::Ok => StatusCode::OK,
            ApiStatus::NotFound => StatusCode::NOT_FOUND,
            ApiStatus::InvalidInput => StatusCode::BAD_REQUEST,
            ApiStatus::UpstreamError => StatusCode::BAD_GATEWAY,
            ApiStatus::RateLimited => StatusCode::TOO_MANY_REQUESTS,
            ApiStatus::Unauthorized => StatusCode::UNAUTHORIZED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiResponse<T> {
    pub status: ApiStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Set on upstream failures: the fetch status that caused them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fetch_status: Option<FetchStatus>,
    pub snapshot_id: String,
    pub generated_at: DateTime<Utc>,
}

impl<T: Serialize> ApiResponse<T> {
    pub fn ok(snapshot_id: &str, payload: T) -> Self {
        ApiResponse {
            status: ApiStatus::Ok,
            payload: Some(payload),
            error: None,
            fetch_status: None,
            snapshot_id: snapshot_id.to_string(),
            generated_at: Utc::now(),
        }
    }
}

impl<T: Serialize> IntoResponse for ApiResponse<T> {
    fn into_response(self) -> Response {
        (self.status.http(), Json(self)).into_response()
    }
}

/// A failed request; rendered as an envelope without payload.
#[derive(Debug)]
pub struct ApiError {
    status: ApiStatus,
    message: String,
    snapshot_id: String,
    fetch_status: Option<FetchStatus>,
}

impl ApiError {
    fn new(status: ApiStatus, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            snapshot_id: String::new(),
            fetch_status: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) | Error::Config(_) | Error::NonComparable(_) => {
                ApiStatus::InvalidInput
            }
            Error::UnknownSnapshot(_) => ApiStatus::NotFound,
            _ => ApiStatus::UpstreamError,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        ApiResponse::<()> {
            status: self.status,
            payload: None,
            error: Some(self.message),
            fetch_status: self.fetch_status,
            snapshot_id: self.snapshot_id,
            generated_at: Utc::now(),
        }
        .into_response()
    }
}

type ApiResult<T> = Result<ApiResponse<T>, ApiError>;

#[derive(Debug, Clone)]
pub struct RateLimits {
    /// Live fetches per minute allowed to one client address.
    pub per_client_per_minute: NonZeroU32,
    /// Live fetches per minute allowed against one target domain.
    pub per_target_per_minute: NonZeroU32,
    pub burst: NonZeroU32,
}

impl Default for RateLimits {
    fn default() -> Self {
        RateLimits {
            per_client_per_minute: NonZeroU32::new(30).unwrap(),
            per_target_per_minute: NonZeroU32::new(6).unwrap(),
            burst: NonZeroU32::new(3).unwrap(),
        }
    }
}

/// Everything the service needs besides the datastore.
pub struct ServiceConfig {
    pub inputs: AnalysisInputs,
    pub admin_token: Option<String>,
    /// Transport for live fetches; `None` disables them.
    pub transport: Option<Arc<dyn Transport>>,
    pub crawl: CrawlConfig,
    pub limits: RateLimits,
    pub top_n: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            inputs: AnalysisInputs::default(),
            admin_token: None,
            transport: None,
            crawl: CrawlConfig::default(),
            limits: RateLimits::default(),
            top_n: 10,
        }
    }
}

pub struct AppState {
    store: Datastore,
    config: ServiceConfig,
    cache: RwLock<HashMap<String, Arc<Analyzed>>>,
    client_limiter: DefaultKeyedRateLimiter<String>,
    target_limiter: DefaultKeyedRateLimiter<String>,
}

impl AppState {
    pub fn new(store: Datastore, config: ServiceConfig) -> Arc<Self> {
        let quota =
            |per_minute: NonZeroU32| Quota::per_minute(per_minute).allow_burst(config.limits.burst);
        Arc::new(AppState {
            client_limiter: RateLimiter::keyed(quota(config.limits.per_client_per_minute)),
            target_limiter: RateLimiter::keyed(quota(config.limits.per_target_per_minute)),
            store,
            config,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn store(&self) -> &Datastore {
        &self.store
    }

    fn resolve(&self, requested: Option<&str>) -> Result<Option<String>, ApiError> {
        match requested {
            Some(id) => Ok(Some(self.store.resolve(Some(id))?)),
            None => Ok(self.store.latest_id()?),
        }
    }

    /// The analysed snapshot for `requested`, defaulting to the latest one.
    pub fn analyzed(&self, requested: Option<&str>) -> Result<Arc<Analyzed>, ApiError> {
        let Some(id) = self.resolve(requested)? else {
            return Err(ApiError::new(
                ApiStatus::NotFound,
                "no snapshot has been ingested",
            ));
        };
        if let Some(a) = self.cache.read().expect("cache poisoned").get(&id) {
            return Ok(a.clone());
        }
        let a = Arc::new(Analyzed::load(&self.store, &id, &self.config.inputs)?);
        self.cache
            .write()
            .expect("cache poisoned")
            .insert(id, a.clone());
        Ok(a)
    }

    fn invalidate(&self, id: &str) {
        self.cache.write().expect("cache poisoned").remove(id);
    }

    /// Stats for a snapshot, or all-zero stats when nothing is ingested.
    pub fn stats(&self, requested: Option<&str>) -> Result<(String, CorpusStats), ApiError> {
        if requested.is_none() && self.store.latest_id()?.is_none() {
            return Ok((String::new(), CorpusStats::default()));
        }
        let a = self.analyzed(requested)?;
        let mut stats = corpus_stats(&a.report, self.config.top_n);
        stats.verified_hidden_series = verified_hidden_series(&self.store, &self.config.inputs)?;
        Ok((a.snapshot_id().to_string(), stats))
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct SnapshotQuery {
    pub snapshot: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct FetchQuery {
    #[serde(default)]
    pub persist: bool,
}

async fn blocking<T, F>(state: Arc<AppState>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError::new(ApiStatus::UpstreamError, format!("worker failed: {e}")))?
}

fn tool<T, F>(state: &AppState, q: &SnapshotQuery, f: F) -> ApiResult<T>
where
    T: Serialize,
    F: FnOnce(&Analyzed) -> adtrace_core::Result<T>,
{
    let a = state.analyzed(q.snapshot.as_deref())?;
    let payload = f(&a).map_err(|e| ApiError {
        snapshot_id: a.snapshot_id().to_string(),
        ..ApiError::from(e)
    })?;
    Ok(ApiResponse::ok(a.snapshot_id(), payload))
}

async fn pooling(
    State(state): State<Arc<AppState>>,
    Path((network, account_id)): Path<(String, String)>,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    blocking(state, move |s| {
        tool(s, &q, |a| pooling_lookup(a, &network, &account_id))
    })
    .await
}

async fn hidden(
    State(state): State<Arc<AppState>>,
    Path(domain): Path<String>,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    blocking(state, move |s| {
        tool(s, &q, |a| hidden_intermediary_lookup(a, &domain))
    })
    .await
}

async fn partners(
    State(state): State<Arc<AppState>>,
    Path(domain): Path<String>,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    blocking(state, move |s| tool(s, &q, |a| partnerships(a, &domain))).await
}

async fn relations(
    State(state): State<Arc<AppState>>,
    Path(domain): Path<String>,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    blocking(state, move |s| tool(s, &q, |a| relationships(a, &domain))).await
}

async fn stats(
    State(state): State<Arc<AppState>>,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    blocking(state, move |s| {
        let (id, stats) = s.stats(q.snapshot.as_deref())?;
        Ok(ApiResponse::ok(&id, stats))
    })
    .await
}

async fn snapshots(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    blocking(state, |s| {
        let list = s.store.list_snapshots()?;
        let latest = list
            .last()
            .map(|i| i.snapshot_id.clone())
            .unwrap_or_default();
        Ok(ApiResponse::ok(&latest, list))
    })
    .await
}

fn client_key(ext: &Extensions, headers: &HeaderMap) -> String {
    if let Some(ConnectInfo(addr)) = ext.get::<ConnectInfo<SocketAddr>>() {
        return addr.ip().to_string();
    }
    headers
        .get("x-forwarded-for")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(',').next())
        .map(|v| v.trim().to_string())
        .unwrap_or_else(|| "local".to_string())
}

async fn fetch(
    State(state): State<Arc<AppState>>,
    Path((domain, kind)): Path<(String, String)>,
    Query(q): Query<FetchQuery>,
    ext: Extensions,
    headers: HeaderMap,
) -> Response {
    let kind: FileKind = match kind.parse() {
        Ok(k) => k,
        Err(_) => {
            return ApiError::new(
                ApiStatus::InvalidInput,
                format!("unknown file kind {kind:?}"),
            )
            .into_response()
        }
    };
    let domain = match validate_domain(&domain) {
        Ok(d) => d,
        Err(e) => return ApiError::from(e).into_response(),
    };
    if state
        .client_limiter
        .check_key(&client_key(&ext, &headers))
        .is_err()
        || state.target_limiter.check_key(&domain).is_err()
    {
        return ApiError::new(ApiStatus::RateLimited, "too many live fetches, retry later")
            .into_response();
    }
    blocking(state, move |s| {
        let Some(transport) = s.config.transport.as_deref() else {
            return Err(ApiError::new(
                ApiStatus::UpstreamError,
                "live fetching is disabled",
            ));
        };
        let fetched = live_fetch_passthrough(&domain, kind, &s.config.crawl, transport)?;
        if !fetched.outcome.is_ok() {
            return Err(ApiError {
                fetch_status: Some(fetched.outcome.status),
                ..ApiError::new(
                    ApiStatus::UpstreamError,
                    format!(
                        "fetch of {} failed: {}",
                        fetched.outcome.url,
                        fetched.outcome.status.as_str()
                    ),
                )
            });
        }
        let snapshot_id = if q.persist {
            s.store.ingest(fetched.clone().into_snapshot())?.snapshot_id
        } else {
            String::new()
        };
        Ok(ApiResponse::ok(&snapshot_id, fetched))
    })
    .await
    .into_response()
}

fn authorize(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let Some(expected) = state
        .config
        .admin_token
        .as_deref()
        .filter(|t| !t.is_empty())
    else {
        return Err(ApiError::new(
            ApiStatus::Unauthorized,
            "admin endpoints are disabled",
        ));
    };
    let given = headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given != Some(expected) {
        return Err(ApiError::new(
            ApiStatus::Unauthorized,
            "missing or wrong admin token",
        ));
    }
    Ok(())
}

async fn admin_ingest(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> impl IntoResponse {
    if let Err(e) = authorize(&state, &headers) {
        return Err(e);
    }
    blocking(state, move |s| {
        let snapshot: CrawlSnapshot = serde_json::from_slice(&body).map_err(|e| {
            ApiError::new(
                ApiStatus::InvalidInput,
                format!("body is not a snapshot: {e}"),
            )
        })?;
        let outcome = s.store.ingest(snapshot)?;
        s.invalidate(&outcome.snapshot_id);
        Ok(ApiResponse::ok(&outcome.snapshot_id.clone(), outcome))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnalyzeOutcome {
    pub inputs_digest: String,
    pub created: bool,
}

async fn admin_analyze(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<SnapshotQuery>,
) -> impl IntoResponse {
    if let Err(e) = authorize(&state, &headers) {
        return Err(e);
    }
    blocking(state, move |s| {
        let Some(id) = s.resolve(q.snapshot.as_deref())? else {
            return Err(ApiError::new(
                ApiStatus::NotFound,
                "no snapshot has been ingested",
            ));
        };
        let (report, created) = materialize(&s.store, &id, &s.config.inputs)?;
        s.invalidate(&id);
        Ok(ApiResponse::ok(
            &id,
            AnalyzeOutcome {
                inputs_digest: report.inputs_digest,
                created,
            },
        ))
    })
    .await
}

async fn not_found() -> ApiError {
    ApiError::new(ApiStatus::NotFound, "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/pooling/{network}/{account_id}", get(pooling))
        .route("/api/v1/hidden-intermediary/{domain}", get(hidden))
        .route("/api/v1/partnerships/{domain}", get(partners))
        .route("/api/v1/relationships/{domain}", get(relations))
        .route("/api/v1/fetch/{domain}/{kind}", get(fetch))
        .route("/api/v1/stats", get(stats))
        .route("/api/v1/snapshots", get(snapshots))
        .route("/api/v1/admin/ingest", post(admin_ingest))
        .route("/api/v1/admin/analyze", post(admin_analyze))
        .fallback(not_found)
        .with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(
        listener,
        router(state).into_make_service_with_connect_info::<SocketAddr>(),
    )
    .with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
