//! JSON API over a case store for the review UI.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crashviz_core::benchmark::BenchmarkError;
use crashviz_core::{aggregate, render_report, ConsensusSheet, CrashRecord, MetricId, Rater, ReportFormat};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::ratings::{case_conflicts, select_sheets};
use crate::sheets::SheetRow;
use crate::store::{is_safe_id, CaseStore, Generation, StoreError, PROMPT_FILE, TRUTH_FILE};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub store: Arc<CaseStore>,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::InvalidId(_) | StoreError::InvalidPath(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/rubric", get(rubric))
        .route("/api/cases", get(list_cases))
        .route("/api/cases/{id}", get(case_detail))
        .route("/api/cases/{id}/artifacts/{*name}", get(artifact))
        .route("/api/cases/{id}/scores", post(post_score))
        .route("/api/cases/{id}/conflicts", get(conflicts))
        .route("/api/cases/{id}/consensus", post(post_consensus))
        .route("/api/report", get(report))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<CaseStore>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::BindFailure { addr, source })?;
    let app = router(Arc::new(AppState { store }), ui_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Serialize)]
struct RubricEntry {
    key: String,
    number: usize,
    name: &'static str,
    description: &'static str,
}

async fn rubric() -> Json<Vec<RubricEntry>> {
    Json(
        MetricId::ALL
            .into_iter()
            .map(|m| RubricEntry {
                key: format!("m{}", m.number()),
                number: m.number(),
                name: m.name(),
                description: m.description(),
            })
            .collect(),
    )
}

#[derive(Serialize)]
struct CaseSummary {
    case_id: String,
    collision_type: String,
    has_truth: bool,
    models: Vec<String>,
    raters: Vec<String>,
}

async fn list_cases(State(state): State<Arc<AppState>>) -> ApiResult<Json<Vec<CaseSummary>>> {
    let store = &state.store;
    let mut out = Vec::new();
    for case_id in store.list_cases()? {
        let record = store.record(&case_id)?;
        let artifacts = store.artifacts(&case_id)?;
        let mut raters: Vec<String> = store.sheets(&case_id)?.iter().map(|s| s.rater.id().to_string()).collect();
        raters.sort();
        raters.dedup();
        out.push(CaseSummary {
            collision_type: record.collision_type.label().to_string(),
            has_truth: artifacts.iter().any(|a| a == TRUTH_FILE),
            models: store.generations(&case_id)?.into_iter().map(|g| g.model_id).collect(),
            raters,
            case_id,
        });
    }
    Ok(Json(out))
}

#[derive(Serialize)]
struct CaseDetail {
    case_id: String,
    record: CrashRecord,
    prompt: String,
    artifacts: Vec<String>,
    generations: Vec<Generation>,
    sheets: Vec<SheetRow>,
}

async fn case_detail(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<CaseDetail>> {
    let store = &state.store;
    let record = store.record(&id)?;
    let prompt = store
        .read_artifact(&id, PROMPT_FILE)
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .unwrap_or_default();
    Ok(Json(CaseDetail {
        record,
        prompt,
        artifacts: store.artifacts(&id)?,
        generations: store.generations(&id)?,
        sheets: store.sheets(&id)?.iter().map(SheetRow::from_sheet).collect(),
        case_id: id,
    }))
}

fn content_type(name: &str) -> &'static str {
    match name.rsplit('.').next().unwrap_or("") {
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "pdf" => "application/pdf",
        "json" => "application/json",
        "csv" => "text/csv; charset=utf-8",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

async fn artifact(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<Response> {
    let bytes = state.store.read_artifact(&id, &name)?;
    Ok(([(header::CONTENT_TYPE, content_type(&name))], bytes).into_response())
}

async fn post_score(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(mut row): Json<SheetRow>,
) -> ApiResult<(StatusCode, Json<SheetRow>)> {
    let store = &state.store;
    if !store.has_case(&id) {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("case `{id}` not found")));
    }
    if row.case_id.trim().is_empty() {
        row.case_id = id.clone();
    } else if row.case_id != id {
        return Err(ApiError::bad_request(format!("body case_id `{}` does not match `{id}`", row.case_id)));
    }
    let sheet = row.to_sheet().map_err(ApiError::bad_request)?;
    if !sheet.rater.is_human() || !is_safe_id(sheet.rater.id()) {
        return Err(ApiError::bad_request(format!("`{}` is not a usable human rater id", row.rater_id)));
    }
    if !store.generations(&id)?.iter().any(|g| g.model_id == sheet.model_id) {
        return Err(ApiError::bad_request(format!("case `{id}` has no output from `{}`", sheet.model_id)));
    }
    store.put_sheet(&sheet)?;
    Ok((StatusCode::CREATED, Json(SheetRow::from_sheet(&sheet))))
}

#[derive(Serialize)]
struct ConflictView {
    #[serde(flatten)]
    merged: ConsensusSheet,
    consensus: Option<SheetRow>,
}

async fn conflicts(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Vec<ConflictView>>> {
    let sheets = state.store.sheets(&id)?;
    let views = case_conflicts(&sheets)
        .into_iter()
        .map(|merged| {
            let consensus = sheets
                .iter()
                .find(|s| s.rater == Rater::Consensus && s.model_id == merged.model_id)
                .map(SheetRow::from_sheet);
            ConflictView { merged, consensus }
        })
        .collect();
    Ok(Json(views))
}

#[derive(Deserialize)]
struct ConsensusRequest {
    model_id: String,
    /// `{"m5": 1}`
    resolutions: BTreeMap<String, u8>,
    #[serde(default)]
    notes: BTreeMap<String, String>,
}

fn metric_key(key: &str) -> Option<MetricId> {
    key.strip_prefix('m').and_then(|n| n.parse().ok()).and_then(MetricId::from_number)
}

async fn post_consensus(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<ConsensusRequest>,
) -> ApiResult<(StatusCode, Json<SheetRow>)> {
    let sheets = state.store.sheets(&id)?;
    let mut merged = case_conflicts(&sheets)
        .into_iter()
        .find(|c| c.model_id == req.model_id)
        .ok_or_else(|| {
            ApiError(StatusCode::CONFLICT, format!("no rater disagreement for `{}` on `{id}`", req.model_id))
        })?;
    for (key, value) in &req.resolutions {
        let metric = metric_key(key).ok_or_else(|| ApiError::bad_request(format!("`{key}` is not a metric")))?;
        if *value > 1 {
            return Err(ApiError::bad_request(format!("{key} must be 0 or 1")));
        }
        let note = req.notes.get(key).map(String::as_str).unwrap_or("");
        if !merged.resolve(metric, *value == 1, note) {
            return Err(ApiError::bad_request(format!("{key} is not in conflict")));
        }
    }
    if !merged.is_resolved() {
        let open: Vec<String> = merged
            .conflicts
            .iter()
            .filter(|c| c.resolution.is_none())
            .map(|c| format!("m{}", c.metric.number()))
            .collect();
        return Err(ApiError::bad_request(format!("unresolved: {}", open.join(", "))));
    }
    let sheet = merged.to_score_sheet();
    state.store.put_sheet(&sheet)?;
    Ok((StatusCode::CREATED, Json(SheetRow::from_sheet(&sheet))))
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn report(State(state): State<Arc<AppState>>, Query(q): Query<ReportQuery>) -> ApiResult<Response> {
    let name = q.format.as_deref().unwrap_or("json");
    let format = ReportFormat::parse(name).ok_or_else(|| ApiError::bad_request(format!("unknown format `{name}`")))?;
    let selection = select_sheets(&state.store.all_sheets()?);
    let report = aggregate(&selection.sheets).map_err(|e| match e {
        BenchmarkError::EmptyInput => ApiError(StatusCode::NOT_FOUND, e.to_string()),
    })?;
    let mime = match format {
        ReportFormat::Json => "application/json",
        ReportFormat::Csv => "text/csv; charset=utf-8",
        ReportFormat::Markdown => "text/markdown; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, mime)], render_report(&report, format)).into_response())
}
