//! Chat-completion gateway with a content-addressed record/replay store.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::{Message, PromptBundle};

mod http;
mod store;

pub use http::{HttpTransport, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use store::{ReplayStore, StoredRecord};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-16k";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl CompletionRequest {
    pub fn new(model_id: impl Into<String>, messages: Vec<Message>) -> Self {
        Self {
            model_id: model_id.into(),
            messages,
            temperature: 0.0,
            max_tokens: None,
        }
    }

    pub fn from_bundle(model_id: impl Into<String>, bundle: &PromptBundle) -> Self {
        Self::new(model_id, bundle.messages.clone())
    }

    pub fn digest(&self) -> String {
        request_digest(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request_digest: String,
    pub response_text: String,
    pub latency_ms: u64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("no recorded response for request {0}")]
    CacheMiss(String),
    #[error("transport error (status {status:?}): {body_excerpt}")]
    Transport {
        status: Option<u16>,
        body_excerpt: String,
    },
    #[error("rate limited (retry after {retry_after:?})")]
    RateLimited { retry_after: Option<Duration> },
    #[error("replay store: {0}")]
    Store(String),
    #[error("gateway configuration: {0}")]
    Config(String),
}

/// Sort object keys recursively so that equal requests hash equally.
pub fn canonical_json(v: &Json) -> Json {
    match v {
        Json::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            Json::Object(
                keys.into_iter()
                    .map(|k| (k.clone(), canonical_json(&m[k])))
                    .collect(),
            )
        }
        Json::Array(a) => Json::Array(a.iter().map(canonical_json).collect()),
        other => other.clone(),
    }
}

/// Hex SHA-256 of the canonical JSON of (model_id, messages, temperature).
pub fn request_digest(req: &CompletionRequest) -> String {
    let value = json!({
        "model_id": req.model_id,
        "messages": req.messages,
        "temperature": req.temperature,
    });
    digest_of_value(&value)
}

pub(crate) fn digest_of_value(value: &Json) -> String {
    let text = serde_json::to_string(&canonical_json(value)).unwrap_or_default();
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Why a single transport attempt failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    RateLimited { retry_after: Option<Duration> },
    Status { status: u16, body_excerpt: String },
    Io(String),
}

impl TransportFailure {
    fn retryable(&self) -> bool {
        match self {
            TransportFailure::RateLimited { .. } | TransportFailure::Io(_) => true,
            TransportFailure::Status { status, .. } => *status >= 500,
        }
    }

    fn into_error(self) -> GatewayError {
        match self {
            TransportFailure::RateLimited { retry_after } => {
                GatewayError::RateLimited { retry_after }
            }
            TransportFailure::Status {
                status,
                body_excerpt,
            } => GatewayError::Transport {
                status: Some(status),
                body_excerpt,
            },
            TransportFailure::Io(msg) => GatewayError::Transport {
                status: None,
                body_excerpt: msg,
            },
        }
    }
}

/// One network round trip for a request.
pub trait Transport: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportFailure>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_secs(1),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Delay after failed attempt `n` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Replay,
    Hybrid,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "live" => Some(Mode::Live),
            "replay" => Some(Mode::Replay),
            "hybrid" => Some(Mode::Hybrid),
            _ => None,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct Gateway {
    mode: Mode,
    transport: Option<Arc<dyn Transport>>,
    store: Option<ReplayStore>,
    retry: RetryPolicy,
    sleeper: Sleeper,
    in_flight: Semaphore,
    /// Serializes hybrid misses per digest so identical requests hit the
    /// network once.
    pending: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("store", &self.store)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_CONCURRENCY: usize = 4;

impl Gateway {
    pub fn replay(store: ReplayStore) -> Self {
        Self::build(Mode::Replay, None, Some(store))
    }

    pub fn live(transport: Arc<dyn Transport>, store: Option<ReplayStore>) -> Self {
        Self::build(Mode::Live, Some(transport), store)
    }

    pub fn hybrid(transport: Arc<dyn Transport>, store: ReplayStore) -> Self {
        Self::build(Mode::Hybrid, Some(transport), Some(store))
    }

    fn build(
        mode: Mode,
        transport: Option<Arc<dyn Transport>>,
        store: Option<ReplayStore>,
    ) -> Self {
        Self {
            mode,
            transport,
            store,
            retry: RetryPolicy::default(),
            sleeper: Arc::new(std::thread::sleep),
            in_flight: Semaphore::new(DEFAULT_CONCURRENCY),
            pending: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.in_flight = Semaphore::new(n);
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionRecord, GatewayError> {
        let digest = request_digest(request);
        match self.mode {
            Mode::Replay => self
                .replayed(&digest)?
                .ok_or(GatewayError::CacheMiss(digest)),
            Mode::Live => self.call_live(request, digest),
            Mode::Hybrid => {
                if let Some(r) = self.replayed(&digest)? {
                    return Ok(r);
                }
                let lock = {
                    let mut pending = self.pending.lock().unwrap_or_else(|e| e.into_inner());
                    pending.entry(digest.clone()).or_default().clone()
                };
                let _held = lock.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(r) = self.replayed(&digest)? {
                    return Ok(r);
                }
                self.call_live(request, digest)
            }
        }
    }

    fn replayed(&self, digest: &str) -> Result<Option<CompletionRecord>, GatewayError> {
        let store = self
            .store
            .as_ref()
            .ok_or_else(|| GatewayError::Config("replay needs a store directory".into()))?;
        Ok(store.get(digest)?.map(|s| CompletionRecord {
            request_digest: digest.to_string(),
            response_text: s.response_text,
            latency_ms: s.latency_ms,
            backend: Backend::Replay,
        }))
    }

    fn call_live(
        &self,
        request: &CompletionRequest,
        digest: String,
    ) -> Result<CompletionRecord, GatewayError> {
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| GatewayError::Config("live mode needs an endpoint".into()))?;
        let _slot = self.in_flight.acquire();
        let started = Instant::now();
        let mut attempt = 1;
        let text = loop {
            match transport.send(request) {
                Ok(text) => break text,
                Err(f) if f.retryable() && attempt < self.retry.max_attempts => {
                    let backoff = self.retry.delay(attempt);
                    let wait = match &f {
                        TransportFailure::RateLimited {
                            retry_after: Some(d),
                        } => (*d).max(backoff),
                        _ => backoff,
                    };
                    (self.sleeper)(wait);
                    attempt += 1;
                }
                Err(f) => return Err(f.into_error()),
            }
        };
        let latency_ms = started.elapsed().as_millis() as u64;
        if let Some(store) = &self.store {
            store.put(
                &digest,
                &StoredRecord {
                    request: request.clone(),
                    response_text: text.clone(),
                    latency_ms,
                },
            )?;
        }
        Ok(CompletionRecord {
            request_digest: digest,
            response_text: text,
            latency_ms,
            backend: Backend::Live,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Role;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn request(q: &str) -> CompletionRequest {
        CompletionRequest::new(
            DEFAULT_MODEL,
            vec![
                Message {
                    role: Role::System,
                    content: "sys".into(),
                },
                Message {
                    role: Role::User,
                    content: q.into(),
                },
            ],
        )
    }

    struct Scripted {
        calls: AtomicUsize,
        failures: Vec<TransportFailure>,
    }

    impl Transport for Scripted {
        fn send(&self, req: &CompletionRequest) -> Result<String, TransportFailure> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            match self.failures.get(n) {
                Some(f) => Err(f.clone()),
                None => Ok(format!("echo {}", req.messages[1].content)),
            }
        }
    }

    fn scripted(failures: Vec<TransportFailure>) -> Arc<Scripted> {
        Arc::new(Scripted {
            calls: AtomicUsize::new(0),
            failures,
        })
    }

    fn recording_sleeper() -> (Sleeper, Arc<Mutex<Vec<Duration>>>) {
        let log = Arc::new(Mutex::new(Vec::new()));
        let l = log.clone();
        (Arc::new(move |d| l.lock().unwrap().push(d)), log)
    }

    #[test]
    fn digest_ignores_key_order() {
        let a: Json =
            serde_json::from_str(r#"{"b": 1, "a": {"y": 2, "x": [1, {"q": 0, "p": 1}]}}"#).unwrap();
        let b: Json =
            serde_json::from_str(r#"{"a": {"x": [1, {"p": 1, "q": 0}], "y": 2}, "b": 1}"#).unwrap();
        assert_eq!(digest_of_value(&a), digest_of_value(&b));
        let r = request("q");
        assert_eq!(r.digest().len(), 64);
        let mut other = r.clone();
        other.max_tokens = Some(10);
        assert_eq!(r.digest(), other.digest());
        other.temperature = 0.5;
        assert_ne!(r.digest(), other.digest());
    }

    #[test]
    fn digest_from_permuted_request_json() {
        let r = request("q");
        let permuted = r#"{"temperature": 0.0, "messages": [{"content": "sys", "role": "system"}, {"content": "q", "role": "user"}], "model_id": "gpt-3.5-turbo-16k"}"#;
        let parsed: CompletionRequest = serde_json::from_str(permuted).unwrap();
        assert_eq!(parsed.digest(), r.digest());
    }

    #[test]
    fn replay_hit_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path()).unwrap();
        let r = request("q");
        store
            .put(
                &r.digest(),
                &StoredRecord {
                    request: r.clone(),
                    response_text: "{\"mark\": \"bar\"}".into(),
                    latency_ms: 12,
                },
            )
            .unwrap();
        let gw = Gateway::replay(store);
        let rec = gw.complete(&r).unwrap();
        assert_eq!(rec.backend, Backend::Replay);
        assert_eq!(rec.response_text, "{\"mark\": \"bar\"}");
        assert!(matches!(
            gw.complete(&request("other")),
            Err(GatewayError::CacheMiss(_))
        ));
    }

    #[test]
    fn hybrid_second_call_is_offline() {
        let dir = tempfile::tempdir().unwrap();
        let t = scripted(vec![]);
        let gw = Gateway::hybrid(t.clone(), ReplayStore::open(dir.path()).unwrap());
        let first = gw.complete(&request("q")).unwrap();
        let second = gw.complete(&request("q")).unwrap();
        assert_eq!(first.backend, Backend::Live);
        assert_eq!(second.backend, Backend::Replay);
        assert_eq!(first.response_text, second.response_text);
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn hybrid_concurrent_identical_requests_call_once() {
        let dir = tempfile::tempdir().unwrap();
        let t = scripted(vec![]);
        let gw = Gateway::hybrid(t.clone(), ReplayStore::open(dir.path()).unwrap());
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| gw.complete(&request("same")).unwrap());
            }
        });
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn backoff_doubles_up_to_the_cap() {
        let limited = TransportFailure::RateLimited { retry_after: None };
        let t = scripted(vec![limited.clone(); 4]);
        let (sleeper, log) = recording_sleeper();
        let gw = Gateway::live(t.clone(), None).with_sleeper(sleeper);
        assert!(gw.complete(&request("q")).is_ok());
        assert_eq!(
            *log.lock().unwrap(),
            [1, 2, 4, 8].map(Duration::from_secs).to_vec()
        );

        let t = scripted(vec![limited; 5]);
        let (sleeper, log) = recording_sleeper();
        let gw = Gateway::live(t.clone(), None).with_sleeper(sleeper);
        assert!(matches!(
            gw.complete(&request("q")),
            Err(GatewayError::RateLimited { .. })
        ));
        assert_eq!(t.calls.load(Ordering::SeqCst), 5);
        assert_eq!(log.lock().unwrap().len(), 4);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = scripted(vec![TransportFailure::Status {
            status: 400,
            body_excerpt: "bad".into(),
        }]);
        let (sleeper, log) = recording_sleeper();
        let gw = Gateway::live(t.clone(), None).with_sleeper(sleeper);
        assert!(matches!(
            gw.complete(&request("q")),
            Err(GatewayError::Transport {
                status: Some(400),
                ..
            })
        ));
        assert!(log.lock().unwrap().is_empty());
    }

    #[test]
    fn retry_after_is_respected() {
        let t = scripted(vec![TransportFailure::RateLimited {
            retry_after: Some(Duration::from_secs(7)),
        }]);
        let (sleeper, log) = recording_sleeper();
        Gateway::live(t, None)
            .with_sleeper(sleeper)
            .complete(&request("q"))
            .unwrap();
        assert_eq!(*log.lock().unwrap(), vec![Duration::from_secs(7)]);
    }

    #[test]
    fn live_records_to_store() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::live(
            scripted(vec![]),
            Some(ReplayStore::open(dir.path()).unwrap()),
        );
        let r = request("q");
        gw.complete(&r).unwrap();
        let replay = Gateway::replay(ReplayStore::open(dir.path()).unwrap());
        assert_eq!(replay.complete(&r).unwrap().response_text, "echo q");
    }
}
