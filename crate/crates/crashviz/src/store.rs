//! File-backed case store.
//!
//! ```text
//! <root>/cases/<case_id>/record.json
//!                       /prompt.txt
//!                       /base_layout.svg
//!                       /truth.svg
//!                       /report.<ext>
//!                       /gen/<model>.<ext>   gen/<model>.json
//!                       /sheets/<rater_id>.csv
//! <root>/cache/          response cache
//! <root>/runs/<run_id>.json
//! ```
//!
//! A new case directory is assembled under a temp name and renamed into
//! place, so a case is either complete or absent. Later writes replace one
//! file at a time and skip files whose bytes are unchanged. Writers to the
//! same case are serialized.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use crashviz_core::{CrashRecord, ScoreSheet};
use serde::{Deserialize, Serialize};

use crate::client::{write_atomic, GenerationResult, MediaKind, ResponseCache};
use crate::record_io::{parse_record, serialize_record};
use crate::sheets::{ingest_sheets, write_sheets};

pub const RECORD_FILE: &str = "record.json";
pub const PROMPT_FILE: &str = "prompt.txt";
pub const BASE_LAYOUT_FILE: &str = "base_layout.svg";
pub const TRUTH_FILE: &str = "truth.svg";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("`{0}` is not a valid identifier (letters, digits, `.`, `_`, `-`)")]
    InvalidId(String),
    #[error("invalid artifact path `{0}`")]
    InvalidPath(String),
    #[error("case `{0}` not found")]
    NotFound(String),
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Case and rater ids double as path components.
pub fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

/// File stem for a model's output; unsafe characters become `_`.
pub fn model_stem(model_id: &str) -> String {
    let stem: String = model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    stem.trim_start_matches('.').to_string()
}

fn check_relative(name: &str) -> Result<PathBuf, StoreError> {
    let path = PathBuf::from(name);
    let ok = !name.is_empty()
        && path.components().all(|c| matches!(c, Component::Normal(s) if !s.to_string_lossy().starts_with('.')));
    if ok {
        Ok(path)
    } else {
        Err(StoreError::InvalidPath(name.to_string()))
    }
}

/// Sidecar for one stored generation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub model_id: String,
    pub backend_name: String,
    pub media_kind: MediaKind,
    pub artifact: String,
}

pub struct CaseStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl CaseStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in ["cases", "cache", "runs"] {
            let p = root.join(dir);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        Ok(Self { root, locks: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn cache(&self) -> Result<ResponseCache, StoreError> {
        let p = self.root.join("cache");
        ResponseCache::open(&p).map_err(io_err(&p))
    }

    fn case_dir(&self, case_id: &str) -> Result<PathBuf, StoreError> {
        if !is_safe_id(case_id) {
            return Err(StoreError::InvalidId(case_id.to_string()));
        }
        Ok(self.root.join("cases").join(case_id))
    }

    fn lock(&self, case_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(case_id.to_string()).or_default().clone()
    }

    pub fn has_case(&self, case_id: &str) -> bool {
        self.case_dir(case_id).is_ok_and(|d| d.join(RECORD_FILE).is_file())
    }

    /// Writes several files into a case; returns how many were changed.
    pub fn put_files(&self, case_id: &str, files: &[(&str, &[u8])]) -> Result<usize, StoreError> {
        let dir = self.case_dir(case_id)?;
        let rel: Vec<PathBuf> = files.iter().map(|(n, _)| check_relative(n)).collect::<Result<_, _>>()?;
        let lock = self.lock(case_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.write_locked(&dir, &rel, files)
    }

    /// Caller holds the case lock.
    fn write_locked(&self, dir: &Path, rel: &[PathBuf], files: &[(&str, &[u8])]) -> Result<usize, StoreError> {
        if !dir.exists() {
            let cases = self.root.join("cases");
            let tmp = tempfile::Builder::new()
                .prefix(".tmp-")
                .tempdir_in(&cases)
                .map_err(io_err(&cases))?;
            for (path, (_, bytes)) in rel.iter().zip(files) {
                let target = tmp.path().join(path);
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent).map_err(io_err(parent))?;
                }
                fs::write(&target, bytes).map_err(io_err(&target))?;
            }
            let staged = tmp.keep();
            fs::rename(&staged, dir).map_err(io_err(dir))?;
            return Ok(files.len());
        }

        let mut changed = 0;
        for (path, (_, bytes)) in rel.iter().zip(files) {
            let target = dir.join(path);
            if fs::read(&target).is_ok_and(|old| old == *bytes) {
                continue;
            }
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            write_atomic(&target, bytes).map_err(io_err(&target))?;
            changed += 1;
        }
        Ok(changed)
    }

    /// Stores the record itself plus any derived files.
    pub fn put_case(&self, record: &CrashRecord, extra: &[(&str, &[u8])]) -> Result<usize, StoreError> {
        let record_bytes = serialize_record(record);
        let mut files: Vec<(&str, &[u8])> = vec![(RECORD_FILE, &record_bytes)];
        files.extend_from_slice(extra);
        self.put_files(&record.case_id, &files)
    }

    pub fn put_generation(&self, case_id: &str, result: &GenerationResult) -> Result<Generation, StoreError> {
        if !self.has_case(case_id) {
            return Err(StoreError::NotFound(case_id.to_string()));
        }
        let stem = model_stem(&result.model_id);
        let generation = Generation {
            model_id: result.model_id.clone(),
            backend_name: result.backend_name.clone(),
            media_kind: result.media_kind,
            artifact: format!("gen/{stem}.{}", result.media_kind.extension()),
        };
        let mut meta = serde_json::to_vec_pretty(&generation).unwrap_or_default();
        meta.push(b'\n');
        let meta_name = format!("gen/{stem}.json");
        self.put_files(case_id, &[(&generation.artifact, &result.image_bytes), (&meta_name, &meta)])?;
        Ok(generation)
    }

    pub fn list_cases(&self) -> Result<Vec<String>, StoreError> {
        let cases = self.root.join("cases");
        let mut ids: Vec<String> = fs::read_dir(&cases)
            .map_err(io_err(&cases))?
            .filter_map(Result::ok)
            .filter(|e| e.path().join(RECORD_FILE).is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| is_safe_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn record(&self, case_id: &str) -> Result<CrashRecord, StoreError> {
        let path = self.case_dir(case_id)?.join(RECORD_FILE);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(case_id.to_string()),
            _ => StoreError::Io { path: path.clone(), source: e },
        })?;
        parse_record(&bytes).map_err(|e| StoreError::Corrupt { path, reason: e.to_string() })
    }

    /// Relative paths of every file in the case, sorted.
    pub fn artifacts(&self, case_id: &str) -> Result<Vec<String>, StoreError> {
        let dir = self.case_dir(case_id)?;
        if !dir.is_dir() {
            return Err(StoreError::NotFound(case_id.to_string()));
        }
        let mut out = Vec::new();
        let mut stack = vec![dir.clone()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d).map_err(io_err(&d))?.filter_map(Result::ok) {
                let path = entry.path();
                if entry.file_name().to_string_lossy().starts_with('.') {
                    continue;
                }
                if path.is_dir() {
                    stack.push(path);
                } else if let Ok(rel) = path.strip_prefix(&dir) {
                    out.push(rel.to_string_lossy().replace('\\', "/"));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn read_artifact(&self, case_id: &str, name: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.case_dir(case_id)?.join(check_relative(name)?);
        fs::read(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(format!("{case_id}/{name}")),
            _ => StoreError::Io { path: path.clone(), source: e },
        })
    }

    pub fn generations(&self, case_id: &str) -> Result<Vec<Generation>, StoreError> {
        let mut out = Vec::new();
        for name in self.artifacts(case_id)? {
            if name.starts_with("gen/") && name.ends_with(".json") {
                let bytes = self.read_artifact(case_id, &name)?;
                let g: Generation = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
                    path: PathBuf::from(&name),
                    reason: e.to_string(),
                })?;
                out.push(g);
            }
        }
        out.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        Ok(out)
    }

    /// Adds a sheet to `sheets/<rater_id>.csv`, replacing any earlier sheet
    /// from the same rater for the same model.
    pub fn put_sheet(&self, sheet: &ScoreSheet) -> Result<(), StoreError> {
        let rater = sheet.rater.id();
        if !is_safe_id(rater) {
            return Err(StoreError::InvalidId(rater.to_string()));
        }
        if !self.has_case(&sheet.case_id) {
            return Err(StoreError::NotFound(sheet.case_id.clone()));
        }
        let name = format!("sheets/{rater}.csv");
        let lock = self.lock(&sheet.case_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut sheets = self.read_sheet_file(&sheet.case_id, &name)?;
        sheets.retain(|s| s.model_id != sheet.model_id);
        sheets.push(sheet.clone());
        sheets.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        let bytes = write_sheets(&sheets);
        let dir = self.case_dir(&sheet.case_id)?;
        self.write_locked(&dir, &[PathBuf::from(&name)], &[(&name, &bytes)])?;
        Ok(())
    }

    fn read_sheet_file(&self, case_id: &str, name: &str) -> Result<Vec<ScoreSheet>, StoreError> {
        match self.read_artifact(case_id, name) {
            Ok(bytes) => ingest_sheets(&bytes).map_err(|e| StoreError::Corrupt {
                path: PathBuf::from(format!("{case_id}/{name}")),
                reason: e.to_string(),
            }),
            Err(StoreError::NotFound(_)) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    pub fn sheets(&self, case_id: &str) -> Result<Vec<ScoreSheet>, StoreError> {
        let mut out = Vec::new();
        for name in self.artifacts(case_id)? {
            if name.starts_with("sheets/") && name.ends_with(".csv") {
                out.extend(self.read_sheet_file(case_id, &name)?);
            }
        }
        Ok(out)
    }

    pub fn all_sheets(&self) -> Result<Vec<ScoreSheet>, StoreError> {
        let mut out = Vec::new();
        for id in self.list_cases()? {
            out.extend(self.sheets(&id)?);
        }
        Ok(out)
    }

    pub fn write_run(&self, run_id: &str, bytes: &[u8]) -> Result<PathBuf, StoreError> {
        if !is_safe_id(run_id) {
            return Err(StoreError::InvalidId(run_id.to_string()));
        }
        let path = self.runs_dir().join(format!("{run_id}.json"));
        write_atomic(&path, bytes).map_err(io_err(&path))?;
        Ok(path)
    }
}
