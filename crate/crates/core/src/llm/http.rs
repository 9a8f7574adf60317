//! OpenAI-style chat-completions transport.

use std::fmt;
use std::time::Duration;

use serde_json::{json, Value as Json};

use super::{CompletionRequest, GatewayError, Transport, TransportFailure};

pub const ENV_ENDPOINT: &str = "VLBENCH_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "VLBENCH_LLM_API_KEY";
pub const ENV_MODEL: &str = "VLBENCH_LLM_MODEL";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const EXCERPT_CHARS: usize = 300;

pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for HttpTransport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpTransport")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key: api_key.filter(|k| !k.is_empty()),
            client,
        })
    }

    /// Endpoint and credential from the environment.
    pub fn from_env() -> Result<Self, GatewayError> {
        let endpoint = std::env::var(ENV_ENDPOINT).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        Self::new(endpoint, std::env::var(ENV_API_KEY).ok())
    }

    fn redact(&self, text: &str) -> String {
        let mut s: String = text.chars().take(EXCERPT_CHARS).collect();
        if let Some(k) = &self.api_key {
            s = s.replace(k.as_str(), "<redacted>");
        }
        s
    }

    fn body(request: &CompletionRequest) -> Json {
        let mut body = json!({
            "model": request.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        if let Some(n) = request.max_tokens {
            body["max_tokens"] = json!(n);
        }
        body
    }
}

fn retry_after(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    let v = headers.get(reqwest::header::RETRY_AFTER)?.to_str().ok()?;
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|s| *s >= 0.0)
        .map(Duration::from_secs_f64)
}

impl Transport for HttpTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportFailure> {
        let mut req = self.client.post(&self.endpoint).json(&Self::body(request));
        if let Some(k) = &self.api_key {
            req = req.bearer_auth(k);
        }
        let resp = req
            .send()
            .map_err(|e| TransportFailure::Io(self.redact(&e.to_string())))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(TransportFailure::RateLimited {
                retry_after: retry_after(resp.headers()),
            });
        }
        let text = resp
            .text()
            .map_err(|e| TransportFailure::Io(self.redact(&e.to_string())))?;
        if !status.is_success() {
            return Err(TransportFailure::Status {
                status: status.as_u16(),
                body_excerpt: self.redact(&text),
            });
        }
        let parsed: Json = serde_json::from_str(&text).map_err(|_| TransportFailure::Status {
            status: status.as_u16(),
            body_excerpt: self.redact(&text),
        })?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportFailure::Status {
                status: status.as_u16(),
                body_excerpt: self.redact(&text),
            })
    }
}
