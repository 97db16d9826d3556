//! Record to stored diagram: prompt assembly, truth rendering, generation
//! per backend, run manifests, and automatic scoring of stored outputs.

use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use crashviz_core::prompt::Attachment;
use crashviz_core::scene::SceneError;
use crashviz_core::{
    build_prompt, build_scene, evaluate_auto, parse_scene, render_svg, validate_record, CrashRecord,
    GeometryTemplate, PromptBundle, RenderOptions, SceneGraph, Tolerances,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::client::{ClientError, GenerationClient, MediaKind};
use crate::record_io::{serialize_record, RecordSlot};
use crate::store::{CaseStore, Generation, StoreError, BASE_LAYOUT_FILE, PROMPT_FILE, TRUTH_FILE};

/// Stand-in crash report when the record carries no report image.
pub const RECORD_REPORT_REF: &str = "record.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("could not write run manifest: {0}")]
    ManifestWriteFailure(String),
}

fn report_media_type(name: &str) -> &'static str {
    match name.rsplit('.').next().map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("pdf") => "application/pdf",
        Some("svg") => "image/svg+xml",
        Some("txt") => "text/plain",
        _ => "application/octet-stream",
    }
}

fn report_attachment(
    store: &CaseStore,
    record: &CrashRecord,
    report_dir: Option<&Path>,
) -> Result<(Attachment, Option<String>), PipelineError> {
    let Some(reference) = &record.report_image_ref else {
        return Ok((
            Attachment::crash_report(RECORD_REPORT_REF, "application/json", serialize_record(record)),
            None,
        ));
    };
    let ext = Path::new(reference)
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_else(|| "bin".into());
    let stored_name = format!("report.{ext}");
    let bytes = match store.read_artifact(&record.case_id, &stored_name) {
        Ok(b) => b,
        Err(_) => {
            let path = report_dir.map_or_else(|| Path::new(reference).to_path_buf(), |d| d.join(reference));
            std::fs::read(&path).map_err(|e| {
                PipelineError::InvalidRecord(format!("report image `{}`: {e}", path.display()))
            })?
        }
    };
    Ok((
        Attachment::crash_report(&stored_name, report_media_type(&stored_name), bytes),
        Some(stored_name),
    ))
}

/// Validates the record and writes it with its prompt, base layout and
/// reference diagram. Records whose codes cannot be drawn are stored
/// without `truth.svg`.
pub fn prepare_case(
    store: &CaseStore,
    record: &CrashRecord,
    template: &GeometryTemplate,
    report_dir: Option<&Path>,
) -> Result<PromptBundle, PipelineError> {
    let report = validate_record(record);
    if report.has_errors() {
        let msg: Vec<String> = report.findings.iter().map(|f| format!("{}: {}", f.field, f.message)).collect();
        return Err(PipelineError::InvalidRecord(msg.join("; ")));
    }
    let (attachment, stored_report) = report_attachment(store, record, report_dir)?;
    let bundle = build_prompt(template, Some(attachment));
    let truth = match build_scene(record, template) {
        Ok(scene) => Some(render_svg(&scene, &RenderOptions::default()).map_err(|e| {
            PipelineError::InvalidRecord(e.to_string())
        })?),
        Err(SceneError::NonLocalizedCode(_)) => None,
        Err(e) => return Err(PipelineError::InvalidRecord(e.to_string())),
    };
    let layout = bundle.base_layout().map(|a| a.bytes.clone()).unwrap_or_default();
    let mut files: Vec<(&str, &[u8])> = vec![(PROMPT_FILE, bundle.text.as_bytes()), (BASE_LAYOUT_FILE, &layout)];
    if let Some(t) = &truth {
        files.push((TRUTH_FILE, t));
    }
    let report_bytes;
    if let (Some(name), Some(a)) = (&stored_report, bundle.crash_report()) {
        report_bytes = a.bytes.clone();
        files.push((name, &report_bytes));
    }
    store.put_case(record, &files)?;
    Ok(bundle)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseOutcome {
    pub generation: Generation,
    pub from_cache: bool,
    pub latency_ms: u64,
}

pub async fn run_case(
    store: &CaseStore,
    record: &CrashRecord,
    template: &GeometryTemplate,
    client: &GenerationClient,
) -> Result<CaseOutcome, PipelineError> {
    let bundle = prepare_case(store, record, template, None)?;
    let result = client.generate(&bundle, Some(record)).await?;
    let generation = store.put_generation(&record.case_id, &result)?;
    Ok(CaseOutcome { generation, from_cache: result.from_cache, latency_ms: result.latency_ms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEntry {
    pub case_id: String,
    pub backend: String,
    pub model_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub from_cache: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_kind: Option<MediaKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub parallelism: usize,
    pub backends: Vec<String>,
    /// Record order, then backend order.
    pub entries: Vec<RunEntry>,
}

impl RunManifest {
    pub fn count(&self, status: RunStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    pub fn is_complete_success(&self) -> bool {
        self.entries.iter().all(|e| e.status == RunStatus::Ok)
    }
}

pub fn new_run_id(now: DateTime<Utc>) -> String {
    format!("run-{}-{:04x}", now.format("%Y%m%dT%H%M%S%.3fZ"), rand::rng().random::<u16>())
}

/// Runs every valid record through every backend, `parallelism` jobs at
/// a time, and writes the manifest to `runs/<run_id>.json`. Failures are
/// recorded per entry; only a manifest write failure is an error.
pub async fn run_batch(
    store: Arc<CaseStore>,
    slots: Vec<RecordSlot>,
    template: &GeometryTemplate,
    clients: &[Arc<GenerationClient>],
    parallelism: usize,
) -> Result<RunManifest, PipelineError> {
    let started_at = Utc::now();
    let gate = Arc::new(Semaphore::new(parallelism.max(1)));
    let template = Arc::new(template.clone());
    let mut entries: Vec<Option<RunEntry>> = vec![None; slots.len() * clients.len()];
    let mut jobs = JoinSet::new();

    for (i, slot) in slots.into_iter().enumerate() {
        for (j, client) in clients.iter().enumerate() {
            let index = i * clients.len() + j;
            let backend = client.config().name.clone();
            let model_id = client.config().model_id.clone();
            let record = match &slot {
                RecordSlot::Valid(r) => r.clone(),
                RecordSlot::Invalid { label, error } => {
                    entries[index] = Some(RunEntry {
                        case_id: label.clone(),
                        backend,
                        model_id,
                        status: RunStatus::Skipped,
                        reason: Some(error.to_string()),
                        from_cache: false,
                        artifact: None,
                        media_kind: None,
                    });
                    continue;
                }
            };
            let (store, gate, template, client) = (store.clone(), gate.clone(), template.clone(), client.clone());
            jobs.spawn(async move {
                let _permit = gate.acquire_owned().await.ok();
                let outcome = run_case(&store, &record, &template, &client).await;
                let mut entry = RunEntry {
                    case_id: record.case_id.clone(),
                    backend,
                    model_id,
                    status: RunStatus::Ok,
                    reason: None,
                    from_cache: false,
                    artifact: None,
                    media_kind: None,
                };
                match outcome {
                    Ok(o) => {
                        entry.from_cache = o.from_cache;
                        entry.media_kind = Some(o.generation.media_kind);
                        entry.artifact = Some(o.generation.artifact);
                    }
                    Err(PipelineError::InvalidRecord(reason)) => {
                        entry.status = RunStatus::Skipped;
                        entry.reason = Some(reason);
                    }
                    Err(e) => {
                        entry.status = RunStatus::Failed;
                        entry.reason = Some(e.to_string());
                    }
                }
                (index, entry)
            });
        }
    }
    while let Some(done) = jobs.join_next().await {
        match done {
            Ok((index, entry)) => entries[index] = Some(entry),
            Err(e) => return Err(PipelineError::ManifestWriteFailure(format!("worker panicked: {e}"))),
        }
    }

    let finished_at = Utc::now();
    let manifest = RunManifest {
        run_id: new_run_id(started_at),
        started_at,
        finished_at,
        parallelism: parallelism.max(1),
        backends: clients.iter().map(|c| c.config().name.clone()).collect(),
        entries: entries.into_iter().flatten().collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| PipelineError::ManifestWriteFailure(e.to_string()))?;
    bytes.push(b'\n');
    store
        .write_run(&manifest.run_id, &bytes)
        .map_err(|e| PipelineError::ManifestWriteFailure(e.to_string()))?;
    Ok(manifest)
}

/// Outputs that automatic scoring could not handle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedsHuman {
    pub case_id: String,
    pub model_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoEvaluation {
    pub scored: usize,
    pub needs_human: Vec<NeedsHuman>,
}

/// Scores every stored SVG that carries scene metadata and saves the
/// sheets under the `auto` rater.
pub fn evaluate_store(
    store: &CaseStore,
    template: &GeometryTemplate,
    tol: &Tolerances,
    model_filter: Option<&str>,
) -> Result<AutoEvaluation, PipelineError> {
    let mut summary = AutoEvaluation::default();
    for case_id in store.list_cases()? {
        let record = store.record(&case_id)?;
        for generation in store.generations(&case_id)? {
            if model_filter.is_some_and(|m| m != generation.model_id) {
                continue;
            }
            let pending = |reason: String| NeedsHuman {
                case_id: case_id.clone(),
                model_id: generation.model_id.clone(),
                reason,
            };
            let scene: Result<SceneGraph, String> = match generation.media_kind {
                MediaKind::Svg => store
                    .read_artifact(&case_id, &generation.artifact)
                    .map_err(|e| e.to_string())
                    .and_then(|bytes| parse_scene(&bytes).map_err(|e| e.to_string())),
                raster => Err(format!("{} output has no scene metadata", raster.extension())),
            };
            let sheet = scene.and_then(|s| {
                evaluate_auto(&generation.model_id, &s, &record, template, tol).map_err(|e| e.to_string())
            });
            match sheet {
                Ok(sheet) => {
                    store.put_sheet(&sheet)?;
                    summary.scored += 1;
                }
                Err(reason) => summary.needs_human.push(pending(reason)),
            }
        }
    }
    Ok(summary)
}
