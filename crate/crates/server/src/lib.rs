//! HTTP/JSON service over the explanation engine.
//!
//! Every session owns its evidence and parameters behind a fair
//! `tokio::sync::RwLock`: reads proceed together, writes queue in arrival
//! order. Sessions live in memory and expire after an idle period.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use qiq_core::infer::InferenceError;
use qiq_core::qual::{arc_sign, QualError};
use qiq_core::scenario::{ExplainParams, ScenarioError};
use qiq_core::{BeliefNetwork, ConditionalModel, Error as CoreError, NetworkError, Session};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::RwLock;
use uuid::Uuid;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Serve(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct ServerConfig {
    /// Sessions unused for this long are dropped.
    pub idle_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            idle_timeout: Duration::from_secs(30 * 60),
        }
    }
}

struct SessionHandle {
    session: RwLock<Session>,
    created: Instant,
    last_used: Mutex<Instant>,
}

impl SessionHandle {
    fn touch(&self) {
        *self.last_used.lock().expect("clock lock") = Instant::now();
    }

    fn idle_since(&self) -> Instant {
        *self.last_used.lock().expect("clock lock")
    }
}

pub struct AppState {
    network: Arc<BeliefNetwork>,
    sessions: RwLock<HashMap<Uuid, Arc<SessionHandle>>>,
    config: ServerConfig,
}

impl AppState {
    pub fn new(network: BeliefNetwork, config: ServerConfig) -> Arc<Self> {
        Arc::new(AppState {
            network: Arc::new(network),
            sessions: RwLock::new(HashMap::new()),
            config,
        })
    }

    async fn handle(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        let unknown = || ApiError::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`"));
        let uuid = Uuid::parse_str(id).map_err(|_| unknown())?;
        let handle = self.sessions.read().await.get(&uuid).cloned().ok_or_else(unknown)?;
        if handle.idle_since().elapsed() > self.config.idle_timeout {
            self.sessions.write().await.remove(&uuid);
            return Err(unknown());
        }
        handle.touch();
        Ok(handle)
    }

    /// Drops idle sessions; returns how many were removed.
    pub async fn expire_idle(&self) -> usize {
        let mut sessions = self.sessions.write().await;
        let before = sessions.len();
        let limit = self.config.idle_timeout;
        sessions.retain(|_, h| h.idle_since().elapsed() <= limit);
        before - sessions.len()
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    conflict: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            conflict: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match &e {
            _ if e.conflict().is_some() => StatusCode::CONFLICT,
            CoreError::Inference(InferenceError::TooLarge { .. })
            | CoreError::Scenario(ScenarioError::Inference(InferenceError::TooLarge { .. }))
            | CoreError::Qualitative(QualError::NotPolytree | QualError::Unsupported(_))
            | CoreError::Scenario(ScenarioError::TargetObserved(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        let conflict = e.conflict().map(|c| {
            Value::Array(
                c.readings
                    .iter()
                    .map(|(var, value)| json!({"var": var, "value": value}))
                    .collect(),
            )
        });
        ApiError {
            status,
            message: e.to_string(),
            conflict,
        }
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        CoreError::from(e).into()
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.message});
        if let Some(c) = self.conflict {
            body["conflict"] = c;
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    Ok(q?.0)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/network", get(network))
        .route("/describe", get(describe))
        .route("/scales", get(scales))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/evidence", put(put_evidence).get(get_evidence))
        .route("/sessions/{id}/posterior", get(posterior))
        .route("/sessions/{id}/why", get(why))
        .route("/sessions/{id}/impact", get(impact))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends, expiring idle sessions
/// in the background.
pub async fn serve(network: BeliefNetwork, addr: SocketAddr, config: ServerConfig) -> Result<(), ServerError> {
    let state = AppState::new(network, config);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind { addr, source })?;
    let reaper = Arc::clone(&state);
    let period = (config.idle_timeout / 2).clamp(Duration::from_millis(100), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = reaper.expire_idle().await;
            if n > 0 {
                log::info!("expired {n} idle session(s)");
            }
        }
    });
    log::info!("listening on {}", listener.local_addr().unwrap_or(addr));
    axum::serve(listener, router(state)).await?;
    Ok(())
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn create_session(State(state): State<Arc<AppState>>) -> (StatusCode, Json<Created>) {
    let id = Uuid::new_v4();
    let now = Instant::now();
    let handle = SessionHandle {
        session: RwLock::new(Session::new(Arc::clone(&state.network))),
        created: now,
        last_used: Mutex::new(now),
    };
    state.sessions.write().await.insert(id, Arc::new(handle));
    log::debug!("session {id} created");
    (StatusCode::CREATED, Json(Created { id: id.to_string() }))
}

#[derive(Serialize)]
struct VariableView {
    name: String,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    negated_label: Option<String>,
    parents: Vec<String>,
    model: Value,
}

#[derive(Serialize)]
struct ArcView {
    parent: String,
    child: String,
    causal: bool,
    sign: qiq_core::Sign,
    #[serde(skip_serializing_if = "Option::is_none")]
    strength: Option<f64>,
}

async fn network(State(state): State<Arc<AppState>>) -> Json<Value> {
    let net = &state.network;
    let variables: Vec<VariableView> = net
        .ids()
        .map(|v| {
            let var = net.variable(v);
            let model = match net.model(v) {
                ConditionalModel::NoisyOr { causes, leak } => json!({
                    "type": "noisy_or",
                    "causes": causes.iter().map(|c| json!({"parent": c.parent, "strength": c.strength})).collect::<Vec<_>>(),
                    "leak": leak,
                }),
                ConditionalModel::Table { parents, p_true, .. } if parents.is_empty() => {
                    json!({"type": "prior", "p_true": p_true[0]})
                }
                ConditionalModel::Table { parents, p_true, .. } => {
                    json!({"type": "table", "parents": parents, "p_true": p_true})
                }
            };
            VariableView {
                name: var.name.clone(),
                label: var.label.clone(),
                negated_label: var.negated_label.clone(),
                parents: net.parents(v).iter().map(|&p| net.name(p).to_string()).collect(),
                model,
            }
        })
        .collect();
    let arcs: Vec<ArcView> = net
        .arcs()
        .into_iter()
        .map(|a| {
            let strength = match net.model(a.child) {
                ConditionalModel::NoisyOr { causes, .. } => {
                    causes.iter().find(|c| c.parent == net.name(a.parent)).map(|c| c.strength)
                }
                _ => None,
            };
            ArcView {
                parent: net.name(a.parent).to_string(),
                child: net.name(a.child).to_string(),
                causal: a.causal,
                sign: arc_sign(net, a.parent, a.child).unwrap_or(qiq_core::Sign::Ambiguous),
                strength,
            }
        })
        .collect();
    Json(json!({
        "variables": variables,
        "arcs": arcs,
        "topological_order": net.topological_order().iter().map(|&v| net.name(v)).collect::<Vec<_>>(),
        "polytree": net.is_polytree(),
    }))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DescribeQuery {
    #[serde(default)]
    dependencies: bool,
    #[serde(default)]
    compare_priors: bool,
    scale: Option<String>,
    numbers: Option<bool>,
}

#[derive(Serialize)]
struct TextLines {
    sentences: Vec<String>,
    text: String,
}

async fn describe(
    State(state): State<Arc<AppState>>,
    q: Result<Query<DescribeQuery>, QueryRejection>,
) -> ApiResult<TextLines> {
    let q = query(q)?;
    let mut session = Session::new(Arc::clone(&state.network));
    if let Some(scale) = &q.scale {
        session.set_scale(scale, None)?;
    }
    if let Some(on) = q.numbers {
        session.set_numbers(on);
    }
    let sentences = session.describe(q.dependencies, q.compare_priors)?;
    let text = sentences.iter().map(|s| format!("{s}\n")).collect();
    Ok(Json(TextLines { sentences, text }))
}

async fn scales(State(_): State<Arc<AppState>>) -> Json<Value> {
    let registry = qiq_core::ScaleRegistry::default();
    Json(json!({
        "scales": registry.scales(),
        "defaults": {"absolute": qiq_core::phrase::DEFAULT_ABSOLUTE, "relative": qiq_core::phrase::DEFAULT_RELATIVE},
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvidenceBody {
    var: String,
    value: Option<bool>,
}

#[derive(Serialize)]
struct EvidenceItem {
    var: String,
    value: bool,
}

#[derive(Serialize)]
struct EvidenceView {
    evidence: Vec<EvidenceItem>,
}

fn evidence_view(session: &Session) -> EvidenceView {
    EvidenceView {
        evidence: session
            .readings()
            .into_iter()
            .map(|(var, value)| EvidenceItem { var, value })
            .collect(),
    }
}

async fn put_evidence(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> ApiResult<EvidenceView> {
    let handle = state.handle(&id).await?;
    let body: EvidenceBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed evidence body: {e}")))?;
    let mut session = handle.session.write().await;
    session.set_evidence(&body.var, body.value)?;
    Ok(Json(evidence_view(&session)))
}

#[derive(Serialize)]
struct SessionInfo {
    id: String,
    age_seconds: f64,
    idle_timeout_seconds: f64,
    #[serde(flatten)]
    evidence: EvidenceView,
}

async fn session_info(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionInfo> {
    let handle = state.handle(&id).await?;
    let session = handle.session.read().await;
    Ok(Json(SessionInfo {
        id,
        age_seconds: handle.created.elapsed().as_secs_f64(),
        idle_timeout_seconds: state.config.idle_timeout.as_secs_f64(),
        evidence: evidence_view(&session),
    }))
}

async fn get_evidence(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<EvidenceView> {
    let handle = state.handle(&id).await?;
    let session = handle.session.read().await;
    Ok(Json(evidence_view(&session)))
}

#[derive(Deserialize)]
struct TargetQuery {
    target: String,
}

async fn posterior(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<TargetQuery>, QueryRejection>,
) -> ApiResult<qiq_core::session::PosteriorReport> {
    let q = query(q)?;
    let handle = state.handle(&id).await?;
    let session = handle.session.read().await;
    Ok(Json(session.posterior(&q.target)?))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct WhyQuery {
    target: String,
    list_threshold: Option<f64>,
    residual_cap: Option<f64>,
    contrast_factor: Option<f64>,
    but_threshold: Option<f64>,
    scale: Option<String>,
    numbers: Option<bool>,
}

#[derive(Serialize)]
struct WhyResponse {
    document: qiq_core::ExplanationDocument,
    text: String,
    params: ExplainParams,
}

async fn why(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<WhyQuery>, QueryRejection>,
) -> ApiResult<WhyResponse> {
    let q = query(q)?;
    let handle = state.handle(&id).await?;
    // query overrides apply to this request only, on a snapshot
    let mut session = handle.session.read().await.clone();
    for (name, value) in [
        ("list_threshold", q.list_threshold),
        ("residual_cap", q.residual_cap),
        ("contrast_factor", q.contrast_factor),
        ("but_threshold", q.but_threshold),
    ] {
        if let Some(v) = value {
            session.set_param(name, v)?;
        }
    }
    if let Some(scale) = &q.scale {
        session.set_scale(scale, None)?;
    }
    if let Some(on) = q.numbers {
        session.set_numbers(on);
    }
    let document = session.why(&q.target)?;
    Ok(Json(WhyResponse {
        text: document.render(),
        document,
        params: session.params.clone(),
    }))
}

#[derive(Deserialize)]
struct ImpactQuery {
    finding: String,
    target: String,
}

async fn impact(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<ImpactQuery>, QueryRejection>,
) -> ApiResult<qiq_core::session::ImpactReport> {
    let q = query(q)?;
    let handle = state.handle(&id).await?;
    let session = handle.session.read().await;
    Ok(Json(session.impact(&q.finding, &q.target)?))
}
