//! Generation backends: one client per backend, sharing an optional
//! on-disk cache.

mod cache;
mod config;
mod mock;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::Utc;
use crashviz_core::{prompt_fingerprint, CrashRecord, GeometryTemplate, PromptBundle};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

pub use cache::{cache_key, CacheMeta, CachedResponse, ResponseCache};
pub(crate) use cache::write_atomic;
pub use config::{load_backends, BackendConfig, BackendKind, DEFAULT_TOKEN_ENV};
pub use mock::mock_render;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("auth token variable `{0}` is not set")]
    AuthMissing(String),
    #[error("backend unreachable after {attempts} attempt(s): {reason}")]
    BackendUnreachable { attempts: u32, reason: String },
    #[error("backend rejected the request{}: {reason}", status.map(|s| format!(" ({s})")).unwrap_or_default())]
    BackendRejected { status: Option<u16>, reason: String },
    #[error("backend response is not an image: {0}")]
    InvalidResponse(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Svg,
    Png,
    Jpeg,
}

impl MediaKind {
    pub fn extension(self) -> &'static str {
        match self {
            MediaKind::Svg => "svg",
            MediaKind::Png => "png",
            MediaKind::Jpeg => "jpg",
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            MediaKind::Svg => "image/svg+xml",
            MediaKind::Png => "image/png",
            MediaKind::Jpeg => "image/jpeg",
        }
    }

    /// Identifies the image format from the leading bytes.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            return Some(MediaKind::Png);
        }
        if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            return Some(MediaKind::Jpeg);
        }
        let head = &bytes[..bytes.len().min(4096)];
        let text = String::from_utf8_lossy(head);
        let t = text.trim_start_matches('\u{feff}').trim_start();
        ((t.starts_with("<?xml") || t.starts_with("<svg") || t.starts_with("<!--")) && t.contains("<svg"))
            .then_some(MediaKind::Svg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationResult {
    pub image_bytes: Vec<u8>,
    pub media_kind: MediaKind,
    pub backend_name: String,
    pub model_id: String,
    pub latency_ms: u64,
    pub from_cache: bool,
    /// Network attempts made; zero for cache hits and the mock.
    pub attempts: u32,
}

enum Attempt {
    Done(Vec<u8>),
    Retry(String),
    Fail(ClientError),
}

pub struct GenerationClient {
    config: BackendConfig,
    template: GeometryTemplate,
    cache: Option<ResponseCache>,
    http: reqwest::Client,
    inflight: Arc<Semaphore>,
    requests: AtomicU64,
}

impl GenerationClient {
    pub fn new(
        config: BackendConfig,
        template: GeometryTemplate,
        cache: Option<ResponseCache>,
    ) -> Result<Self, ClientError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ClientError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            inflight: Arc::new(Semaphore::new(config.max_inflight)),
            config,
            template,
            cache,
            http,
            requests: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// HTTP requests sent so far, retries included.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// `record` feeds the mock backend; HTTP backends only see the bundle.
    pub async fn generate(
        &self,
        bundle: &PromptBundle,
        record: Option<&CrashRecord>,
    ) -> Result<GenerationResult, ClientError> {
        let started = Instant::now();
        let key = cache_key(&prompt_fingerprint(bundle), &self.config.model_id);
        let result = |bytes: Vec<u8>, media_kind, from_cache, attempts| GenerationResult {
            image_bytes: bytes,
            media_kind,
            backend_name: self.config.name.clone(),
            model_id: self.config.model_id.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            from_cache,
            attempts,
        };
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(result(hit.bytes, hit.meta.media_kind, true, 0));
        }

        let (bytes, attempts) = match self.config.kind {
            BackendKind::Mock => {
                let record = record.ok_or_else(|| ClientError::BackendRejected {
                    status: None,
                    reason: "mock backend needs the case record".into(),
                })?;
                (mock_render(record, &self.template, &self.config.params)?, 0)
            }
            BackendKind::Http => self.call_http(bundle).await?,
        };
        let media_kind = MediaKind::sniff(&bytes).ok_or_else(|| {
            ClientError::InvalidResponse(format!("{} bytes of unrecognized content", bytes.len()))
        })?;

        if let Some(cache) = &self.cache {
            let meta = CacheMeta {
                model_id: self.config.model_id.clone(),
                media_kind,
                created_at: Utc::now(),
            };
            cache
                .put(&key, &bytes, &meta)
                .map_err(|e| ClientError::Cache(e.to_string()))?;
        }
        Ok(result(bytes, media_kind, false, attempts))
    }

    async fn call_http(&self, bundle: &PromptBundle) -> Result<(Vec<u8>, u32), ClientError> {
        let token = std::env::var(&self.config.auth_token_env)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| ClientError::AuthMissing(self.config.auth_token_env.clone()))?;
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                tokio::time::sleep(self.backoff(attempt - 1)).await;
            }
            let outcome = {
                let _permit = self.inflight.acquire().await.map_err(|e| ClientError::Cache(e.to_string()))?;
                self.attempt(bundle, &token).await
            };
            match outcome {
                Attempt::Done(bytes) => return Ok((bytes, attempt + 1)),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(reason) => last = reason,
            }
        }
        Err(ClientError::BackendUnreachable {
            attempts: self.config.max_retries + 1,
            reason: last,
        })
    }

    /// Full jitter: uniform in `[0, base * 2^attempt]`.
    fn backoff(&self, attempt: u32) -> Duration {
        let cap = self.config.backoff_base_ms.saturating_mul(1u64 << attempt.min(20));
        Duration::from_millis(rand::rng().random_range(0..=cap))
    }

    fn form(&self, bundle: &PromptBundle) -> Result<reqwest::multipart::Form, ClientError> {
        let params = serde_json::to_string(&self.config.params).unwrap_or_else(|_| "{}".into());
        let mut form = reqwest::multipart::Form::new()
            .text("model", self.config.model_id.clone())
            .text("prompt", bundle.text.clone())
            .text("params", params);
        for a in &bundle.attachments {
            let part = reqwest::multipart::Part::bytes(a.bytes.clone())
                .file_name(a.media_ref.clone())
                .mime_str(&a.media_type)
                .map_err(|e| ClientError::InvalidConfig(format!("media type `{}`: {e}", a.media_type)))?;
            form = form.part(a.role.as_str(), part);
        }
        Ok(form)
    }

    async fn attempt(&self, bundle: &PromptBundle, token: &str) -> Attempt {
        let form = match self.form(bundle) {
            Ok(f) => f,
            Err(e) => return Attempt::Fail(e),
        };
        self.requests.fetch_add(1, Ordering::Relaxed);
        let response = match self
            .http
            .post(&self.config.endpoint_url)
            .bearer_auth(token)
            .multipart(form)
            .send()
            .await
        {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status();
        if status.is_success() {
            return match response.bytes().await {
                Ok(b) => Attempt::Done(b.to_vec()),
                Err(e) => Attempt::Retry(e.to_string()),
            };
        }
        let body = response.text().await.unwrap_or_default();
        let reason = format!("{status}: {}", body.chars().take(200).collect::<String>());
        if status.as_u16() == 408 || status.as_u16() == 429 || status.is_server_error() {
            Attempt::Retry(reason)
        } else {
            Attempt::Fail(ClientError::BackendRejected {
                status: Some(status.as_u16()),
                reason,
            })
        }
    }
}
