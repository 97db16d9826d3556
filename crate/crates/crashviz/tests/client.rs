mod common;

use std::sync::{Arc, Once};
use std::time::Duration;

use common::{start_stub, SVG};
use crashviz::client::{BackendConfig, ClientError, GenerationClient, MediaKind, ResponseCache};
use crashviz_core::prompt::Attachment;
use crashviz_core::{build_prompt, standard_template, PromptBundle};

const TOKEN_ENV: &str = "CRASHVIZ_CLIENT_TEST_TOKEN";

fn set_token() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| std::env::set_var(TOKEN_ENV, "secret-token"));
}

fn bundle(tag: &str) -> PromptBundle {
    build_prompt(
        &standard_template(),
        Some(Attachment::crash_report("record.json", "application/json", tag.as_bytes().to_vec())),
    )
}

fn config(url: &str) -> BackendConfig {
    let mut c = BackendConfig::http("stub", url, "stub-model");
    c.auth_token_env = TOKEN_ENV.into();
    c.backoff_base_ms = 2;
    c.max_retries = 3;
    c.timeout_secs = 5.0;
    c
}

fn client(c: BackendConfig, cache: Option<ResponseCache>) -> GenerationClient {
    GenerationClient::new(c, standard_template(), cache).unwrap()
}

#[tokio::test]
async fn transient_errors_are_retried_until_success() {
    set_token();
    let (stub, url) = start_stub().await;
    stub.push(503, b"busy");
    stub.push(503, b"busy");
    let c = client(config(&url), None);
    let out = c.generate(&bundle("a"), None).await.unwrap();
    assert_eq!(out.image_bytes, SVG);
    assert_eq!(out.media_kind, MediaKind::Svg);
    assert_eq!(out.attempts, 3);
    assert!(!out.from_cache);
    assert_eq!(stub.hits(), 3);
    assert_eq!(stub.last_auth.lock().unwrap().as_deref(), Some("Bearer secret-token"));
    assert!(*stub.last_body_has_prompt.lock().unwrap());
}

#[tokio::test]
async fn rate_limits_and_timeouts_are_retryable() {
    set_token();
    let (stub, url) = start_stub().await;
    stub.push(429, b"slow down");
    stub.push(408, b"timeout");
    let out = client(config(&url), None).generate(&bundle("a"), None).await.unwrap();
    assert_eq!(out.attempts, 3);
}

#[tokio::test]
async fn retries_stop_at_the_cap() {
    set_token();
    let (stub, url) = start_stub().await;
    for _ in 0..10 {
        stub.push(500, b"down");
    }
    let err = client(config(&url), None).generate(&bundle("a"), None).await.unwrap_err();
    assert!(matches!(err, ClientError::BackendUnreachable { attempts: 4, .. }), "{err}");
    assert_eq!(stub.hits(), 4);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    set_token();
    for status in [400u16, 401, 403, 404, 422] {
        let (stub, url) = start_stub().await;
        stub.push(status, b"no");
        let err = client(config(&url), None).generate(&bundle("a"), None).await.unwrap_err();
        assert!(matches!(err, ClientError::BackendRejected { status: Some(s), .. } if s == status), "{err}");
        assert_eq!(stub.hits(), 1, "status {status}");
    }
}

#[tokio::test]
async fn missing_token_fails_before_any_request() {
    let (stub, url) = start_stub().await;
    let mut c = config(&url);
    c.auth_token_env = "CRASHVIZ_TOKEN_THAT_IS_NEVER_SET".into();
    let err = client(c, None).generate(&bundle("a"), None).await.unwrap_err();
    assert_eq!(err, ClientError::AuthMissing("CRASHVIZ_TOKEN_THAT_IS_NEVER_SET".into()));
    assert_eq!(stub.hits(), 0);
}

#[tokio::test]
async fn non_image_bodies_are_invalid() {
    set_token();
    let (stub, url) = start_stub().await;
    stub.push(200, b"{\"error\": \"content policy\"}");
    let err = client(config(&url), None).generate(&bundle("a"), None).await.unwrap_err();
    assert!(matches!(err, ClientError::InvalidResponse(_)), "{err}");
    assert_eq!(stub.hits(), 1);
}

#[tokio::test]
async fn png_bodies_are_recognized() {
    set_token();
    let (stub, url) = start_stub().await;
    stub.push(200, b"\x89PNG\r\n\x1a\n\0\0\0\rIHDR");
    let out = client(config(&url), None).generate(&bundle("a"), None).await.unwrap();
    assert_eq!(out.media_kind, MediaKind::Png);
}

#[tokio::test]
async fn cache_hits_make_no_requests() {
    set_token();
    let (stub, url) = start_stub().await;
    let dir = tempfile::tempdir().unwrap();
    let cache = ResponseCache::open(dir.path()).unwrap();
    let c = client(config(&url), Some(cache.clone()));
    let first = c.generate(&bundle("a"), None).await.unwrap();
    assert_eq!(stub.hits(), 1);

    // A fresh client on the same cache directory also hits.
    let again = client(config(&url), Some(cache));
    for _ in 0..3 {
        let hit = again.generate(&bundle("a"), None).await.unwrap();
        assert!(hit.from_cache);
        assert_eq!(hit.attempts, 0);
        assert_eq!(hit.image_bytes, first.image_bytes);
    }
    assert_eq!(stub.hits(), 1);
    assert_eq!(again.request_count(), 0);

    // A different attachment is a different fingerprint.
    c.generate(&bundle("b"), None).await.unwrap();
    assert_eq!(stub.hits(), 2);
}

#[tokio::test]
async fn inflight_requests_never_exceed_the_limit() {
    set_token();
    let (stub, url) = start_stub().await;
    *stub.delay.lock().unwrap() = Duration::from_millis(40);
    let mut cfg = config(&url);
    cfg.max_inflight = 2;
    let c = Arc::new(client(cfg, None));
    let jobs: Vec<_> = (0..10)
        .map(|i| {
            let c = c.clone();
            tokio::spawn(async move { c.generate(&bundle(&i.to_string()), None).await })
        })
        .collect();
    for j in jobs {
        j.await.unwrap().unwrap();
    }
    assert_eq!(stub.hits(), 10);
    assert_eq!(stub.peak(), 2);
}

#[tokio::test]
async fn unreachable_endpoint_is_reported() {
    set_token();
    let mut cfg = config("http://127.0.0.1:9/generate");
    cfg.max_retries = 1;
    let err = client(cfg, None).generate(&bundle("a"), None).await.unwrap_err();
    assert!(matches!(err, ClientError::BackendUnreachable { attempts: 2, .. }), "{err}");
}

#[tokio::test]
async fn mock_backend_renders_the_record_and_rejects_unlocalized_codes() {
    let mut record = crashviz::corpus::synthetic_corpus(1, 7, &standard_template()).remove(0);
    let c = client(BackendConfig::mock("GPT-4o"), None);
    let out = c.generate(&bundle("a"), Some(&record)).await.unwrap();
    assert_eq!(out.media_kind, MediaKind::Svg);
    assert!(crashviz_core::parse_scene(&out.image_bytes).is_ok());

    record.vehicles[0].damage_code = crashviz_core::DamageCode::new(16).unwrap();
    let err = c.generate(&bundle("b"), Some(&record)).await.unwrap_err();
    assert!(matches!(err, ClientError::BackendRejected { status: None, .. }), "{err}");
}
