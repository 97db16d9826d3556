#![allow(dead_code)]

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::Router;

pub const SVG: &[u8] = b"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"10\" height=\"10\"></svg>";

/// Scripted generation endpoint. Responses are popped in order; once the
/// script runs out every request gets a small SVG.
#[derive(Default)]
pub struct Stub {
    script: Mutex<VecDeque<(u16, Vec<u8>)>>,
    pub hits: AtomicUsize,
    inflight: AtomicUsize,
    pub max_inflight: AtomicUsize,
    pub delay: Mutex<Duration>,
    pub last_auth: Mutex<Option<String>>,
    pub last_body_has_prompt: Mutex<bool>,
}

impl Stub {
    pub fn push(&self, status: u16, body: &[u8]) {
        self.script.lock().unwrap().push_back((status, body.to_vec()));
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.max_inflight.load(Ordering::SeqCst)
    }
}

async fn handle(State(stub): State<Arc<Stub>>, headers: HeaderMap, body: Bytes) -> impl IntoResponse {
    stub.hits.fetch_add(1, Ordering::SeqCst);
    let now = stub.inflight.fetch_add(1, Ordering::SeqCst) + 1;
    stub.max_inflight.fetch_max(now, Ordering::SeqCst);
    *stub.last_auth.lock().unwrap() =
        headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    *stub.last_body_has_prompt.lock().unwrap() = body
        .windows(b"name=\"prompt\"".len())
        .any(|w| w == b"name=\"prompt\"");
    let delay = *stub.delay.lock().unwrap();
    if !delay.is_zero() {
        tokio::time::sleep(delay).await;
    }
    let (status, bytes) = stub.script.lock().unwrap().pop_front().unwrap_or((200, SVG.to_vec()));
    stub.inflight.fetch_sub(1, Ordering::SeqCst);
    (StatusCode::from_u16(status).unwrap(), bytes)
}

/// Binds on an ephemeral port and serves in the background.
pub async fn start_stub() -> (Arc<Stub>, String) {
    let stub = Arc::new(Stub::default());
    let app = Router::new().route("/generate", post(handle)).with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    (stub, format!("http://{addr}/generate"))
}
