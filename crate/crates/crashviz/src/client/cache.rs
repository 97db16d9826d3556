//! On-disk response cache keyed by prompt fingerprint and model.
//!
//! Each entry is a data file `<key>` plus `<key>.json` metadata. Both are
//! written to a temp file and renamed into place, data first, so a reader
//! that finds the metadata also finds complete data.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::MediaKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub model_id: String,
    pub media_kind: MediaKind,
    pub created_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CachedResponse {
    pub bytes: Vec<u8>,
    pub meta: CacheMeta,
}

#[derive(Clone, Debug)]
pub struct ResponseCache {
    dir: PathBuf,
}

pub fn cache_key(prompt_fingerprint: &str, model_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(prompt_fingerprint.as_bytes());
    h.update([0u8]);
    h.update(model_id.as_bytes());
    hex::encode(h.finalize())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_data()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn data_path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    fn meta_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<CachedResponse> {
        let meta: CacheMeta = serde_json::from_slice(&fs::read(self.meta_path(key)).ok()?).ok()?;
        let bytes = fs::read(self.data_path(key)).ok()?;
        Some(CachedResponse { bytes, meta })
    }

    pub fn put(&self, key: &str, bytes: &[u8], meta: &CacheMeta) -> io::Result<()> {
        write_atomic(&self.data_path(key), bytes)?;
        let meta = serde_json::to_vec_pretty(meta).map_err(io::Error::other)?;
        write_atomic(&self.meta_path(key), &meta)
    }
}
