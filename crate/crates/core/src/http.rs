//! Minimal blocking HTTP abstraction shared by the MediaWiki client and the
//! remote annotation clients.
//!
//! Everything that talks to the network goes through [`HttpTransport`], so
//! tests can substitute a counting double and assert that offline code paths
//! make no requests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

pub const USER_AGENT: &str = concat!("multiwiki/", env!("CARGO_PKG_VERSION"), " (article-pair similarity research tool)");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        Self { status: 200, body: body.into() }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("transport error: {0}")]
pub struct TransportError(pub String);

pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse, TransportError>;
    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError>;
}

/// `reqwest`-backed transport with an explicit user agent.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

fn into_response(resp: reqwest::blocking::Response) -> Result<HttpResponse, TransportError> {
    let status = resp.status().as_u16();
    let body = resp.text().map_err(|e| TransportError(e.to_string()))?;
    Ok(HttpResponse { status, body })
}

impl HttpTransport for ReqwestTransport {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        let resp = self.client.get(url).query(query).send().map_err(|e| TransportError(e.to_string()))?;
        into_response(resp)
    }

    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError> {
        let resp = self
            .client
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| TransportError(e.to_string()))?;
        into_response(resp)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    /// Minimum spacing between consecutive requests through one gate.
    pub min_interval: Duration,
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { min_interval: Duration::from_millis(200), retries: 3, initial_backoff: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self { min_interval: Duration::ZERO, retries: 3, initial_backoff: Duration::ZERO }
    }
}

/// Wraps a transport with a single shared rate-limit gate and bounded
/// exponential-backoff retries on transport failures, 429 and 5xx.
pub struct Throttled<T> {
    inner: T,
    policy: RetryPolicy,
    last_request: Mutex<Option<Instant>>,
}

impl<T: HttpTransport> Throttled<T> {
    pub fn new(inner: T, policy: RetryPolicy) -> Self {
        Self { inner, policy, last_request: Mutex::new(None) }
    }

    fn wait_turn(&self) {
        let mut last = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.policy.min_interval {
                thread::sleep(self.policy.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn with_retries(
        &self,
        call: impl Fn() -> Result<HttpResponse, TransportError>,
    ) -> Result<HttpResponse, TransportError> {
        let mut backoff = self.policy.initial_backoff;
        let mut attempt = 0;
        loop {
            self.wait_turn();
            let result = call();
            let retryable = match &result {
                Ok(resp) => resp.status == 429 || resp.status >= 500,
                Err(_) => true,
            };
            if !retryable || attempt >= self.policy.retries {
                return match result {
                    Ok(resp) if retryable => Err(TransportError(format!("HTTP {} after {} attempts", resp.status, attempt + 1))),
                    other => other,
                };
            }
            log::warn!("request failed (attempt {}), retrying in {:?}", attempt + 1, backoff);
            thread::sleep(backoff);
            backoff *= 2;
            attempt += 1;
        }
    }
}

impl<T: HttpTransport> HttpTransport for Throttled<T> {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        self.with_retries(|| self.inner.get(url, query))
    }

    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError> {
        self.with_retries(|| self.inner.post_json(url, body))
    }
}

pub type Responder = dyn Fn(&str, &[(String, String)], Option<&serde_json::Value>) -> Result<HttpResponse, TransportError>
    + Send
    + Sync;

/// In-process transport that answers from a closure and counts requests.
/// Used as the network double in tests.
#[derive(Clone)]
pub struct CountingTransport {
    responder: Arc<Responder>,
    count: Arc<AtomicUsize>,
}

impl CountingTransport {
    pub fn new<F>(responder: F) -> Self
    where
        F: Fn(&str, &[(String, String)], Option<&serde_json::Value>) -> Result<HttpResponse, TransportError>
            + Send
            + Sync
            + 'static,
    {
        Self { responder: Arc::new(responder), count: Arc::new(AtomicUsize::new(0)) }
    }

    /// A transport that fails every request; any call is a test failure signal.
    pub fn offline() -> Self {
        Self::new(|url, _, _| Err(TransportError(format!("network disabled: {url}"))))
    }

    pub fn requests(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

impl HttpTransport for CountingTransport {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        self.count.fetch_add(1, Ordering::SeqCst);
        (self.responder)(url, query, None)
    }

    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError> {
        self.count.fetch_add(1, Ordering::SeqCst);
        (self.responder)(url, &[], Some(body))
    }
}
