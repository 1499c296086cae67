//! Completion backends behind one async interface, a content-addressed response cache
//! and an order-preserving bounded batch runner.

mod batch;
mod cache;
mod live;
mod scripted;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sldx_core::digest::ContentHash;
use sldx_core::prompting::RenderedPrompt;

pub use batch::{cached_complete, run_batch};
pub use cache::{CacheEntry, ResponseCache};
pub use live::{
    backoff_delay_ms, HttpReply, HttpTransport, LiveBackend, ReqwestTransport, RetryPolicy, TransportError,
    API_KEY_ENV, OFFLINE_ENV,
};
pub use scripted::{ReplayBackend, Script, ScriptEntry, ScriptedBackend};

pub const MAX_RETRIES_LIMIT: u32 = 8;
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no API credential: set {API_KEY_ENV}")]
    CredentialMissing,
    #[error("live backend disabled because {OFFLINE_ENV}=1")]
    Offline,
    #[error("transport failure after {attempts} attempt(s): {message}")]
    TransportFailure { attempts: u32, message: String },
    #[error("API returned status {status}: {body}")]
    NonTransientApiError { status: u16, body: String },
    #[error("unexpected API response body: {0}")]
    MalformedResponse(String),
    #[error("script has no entry for request {0}")]
    ScriptExhausted(ContentHash),
    #[error("scripted failure: {0}")]
    Injected(String),
    #[error("replay cache has no entry for request {0}")]
    CacheMiss(ContentHash),
    #[error("cache entry {path} is corrupt: {message}")]
    CacheCorrupt { path: PathBuf, message: String },
    #[error("cache I/O on {path}: {source}")]
    CacheIo { path: PathBuf, source: std::io::Error },
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid script file: {0}")]
    InvalidScript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
    Scripted,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Live => "live",
            BackendKind::Replay => "replay",
            BackendKind::Scripted => "scripted",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(BackendKind::Live),
            "replay" => Ok(BackendKind::Replay),
            "scripted" => Ok(BackendKind::Scripted),
            other => Err(GatewayError::InvalidConfig(format!(
                "unknown backend {other:?} (expected live, replay or scripted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend: BackendKind,
    pub endpoint_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub cache_dir: PathBuf,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            backend: BackendKind::Scripted,
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            model_id: "gpt-3.5-turbo".to_string(),
            temperature: 0.0,
            timeout_ms: 60_000,
            max_retries: 3,
            cache_dir: PathBuf::from("cache"),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: String| Err(GatewayError::InvalidConfig(m));
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return bad(format!("max_retries must be <= {MAX_RETRIES_LIMIT}, got {}", self.max_retries));
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty".into());
        }
        if self.backend == BackendKind::Live && self.endpoint_url.trim().is_empty() {
            return bad("endpoint_url is empty".into());
        }
        Ok(())
    }
}

/// Cache key of a completion: the model and the prompt's content hash.
pub fn request_hash(model_id: &str, prompt_hash: &ContentHash) -> ContentHash {
    ContentHash::of_parts(&[b"sldx-request/1", model_id.as_bytes(), prompt_hash.as_bytes()])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub prompt: RenderedPrompt,
    pub model_id: String,
}

impl CompletionRequest {
    pub fn new(prompt: RenderedPrompt, model_id: impl Into<String>) -> Self {
        CompletionRequest { prompt, model_id: model_id.into() }
    }

    pub fn request_hash(&self) -> ContentHash {
        request_hash(&self.model_id, &self.prompt.content_hash)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Network,
    Cache,
    Script,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub source: Source,
    pub latency_ms: u64,
    pub model_id: String,
    pub request_hash: ContentHash,
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError>;
}

/// Builds the configured backend. `script` is required for the scripted backend.
pub fn build_backend(
    config: &BackendConfig,
    script: Option<Script>,
) -> Result<Arc<dyn CompletionBackend>, GatewayError> {
    config.validate()?;
    Ok(match config.backend {
        BackendKind::Live => Arc::new(LiveBackend::from_env(config.clone())?),
        BackendKind::Replay => Arc::new(ReplayBackend),
        BackendKind::Scripted => {
            let script =
                script.ok_or_else(|| GatewayError::InvalidConfig("scripted backend needs a script file".into()))?;
            Arc::new(ScriptedBackend::new(script))
        }
    })
}
