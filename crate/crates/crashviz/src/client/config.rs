use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ClientError;

pub const DEFAULT_TOKEN_ENV: &str = "CRASHVIZ_BACKEND_TOKEN";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Http,
    /// Offline stand-in that draws the reference diagram from the record.
    Mock,
}

/// One generation backend. Loaded from JSON; the token itself is read from
/// the environment variable named by `auth_token_env` at call time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub name: String,
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default = "default_token_env")]
    pub auth_token_env: String,
    pub model_id: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_inflight")]
    pub max_inflight: usize,
    /// Sent verbatim with each request.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.into()
}
fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_inflight() -> usize {
    4
}

impl BackendConfig {
    pub fn http(name: &str, endpoint_url: &str, model_id: &str) -> Self {
        Self {
            name: name.into(),
            kind: BackendKind::Http,
            endpoint_url: endpoint_url.into(),
            auth_token_env: default_token_env(),
            model_id: model_id.into(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_base_ms: default_backoff(),
            max_inflight: default_inflight(),
            params: BTreeMap::new(),
        }
    }

    pub fn mock(model_id: &str) -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint_url: String::new(),
            ..Self::http(&format!("mock-{}", model_id.to_ascii_lowercase()), "", model_id)
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |why: &str| Err(ClientError::InvalidConfig(format!("backend `{}`: {why}", self.name)));
        if self.name.trim().is_empty() {
            return bad("name is empty");
        }
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty");
        }
        if self.max_inflight == 0 {
            return bad("max_inflight must be at least 1");
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        if self.kind == BackendKind::Http
            && !(self.endpoint_url.starts_with("http://") || self.endpoint_url.starts_with("https://"))
        {
            return bad("endpoint_url must be an http(s) URL");
        }
        Ok(())
    }
}

/// Reads a single backend object or an array of them.
pub fn load_backends(bytes: &[u8]) -> Result<Vec<BackendConfig>, ClientError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ClientError::InvalidConfig(e.to_string()))?;
    let configs: Vec<BackendConfig> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value),
        single => serde_json::from_value(single).map(|c| vec![c]),
    }
    .map_err(|e| ClientError::InvalidConfig(e.to_string()))?;
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}
