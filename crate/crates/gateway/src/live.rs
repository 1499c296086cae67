use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use rand::Rng;
use serde_json::{json, Value};

use crate::{BackendConfig, BackendKind, CompletionBackend, CompletionRequest, CompletionResult, GatewayError, Source};

pub const API_KEY_ENV: &str = "SLDX_API_KEY";
pub const OFFLINE_ENV: &str = "SLDX_OFFLINE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub timed_out: bool,
    pub message: String,
}

/// The one HTTP call the live backend makes; swapped out in tests.
#[async_trait]
pub trait HttpTransport: Send + Sync {
    async fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError>;
}

#[derive(Debug, Clone, Default)]
pub struct ReqwestTransport {
    client: reqwest::Client,
}

#[async_trait]
impl HttpTransport for ReqwestTransport {
    async fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let sent = self.client.post(url).bearer_auth(bearer).json(body).timeout(timeout).send().await;
        let response = sent.map_err(|e| TransportError { timed_out: e.is_timeout(), message: e.to_string() })?;
        let status = response.status().as_u16();
        let body =
            response.text().await.map_err(|e| TransportError { timed_out: e.is_timeout(), message: e.to_string() })?;
        Ok(HttpReply { status, body })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_ms: u64,
    pub factor: f64,
    /// Relative jitter; 0.2 spreads each delay over ±20%.
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn with_retries(max_retries: u32) -> Self {
        RetryPolicy { max_retries, base_ms: 500, factor: 2.0, jitter: 0.2 }
    }
}

/// Delay before retry number `retry` (0-based); `unit` in [0, 1) picks the jitter.
pub fn backoff_delay_ms(policy: &RetryPolicy, retry: u32, unit: f64) -> u64 {
    let nominal = policy.base_ms as f64 * policy.factor.powi(retry as i32);
    let scale = 1.0 + policy.jitter * (2.0 * unit - 1.0);
    (nominal * scale).round().max(0.0) as u64
}

fn is_transient(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

pub struct LiveBackend {
    config: BackendConfig,
    api_key: String,
    policy: RetryPolicy,
    transport: Arc<dyn HttpTransport>,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend")
            .field("config", &self.config)
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl LiveBackend {
    /// Reads the credential and the offline switch from the environment.
    pub fn from_env(config: BackendConfig) -> Result<Self, GatewayError> {
        let offline = std::env::var(OFFLINE_ENV).is_ok_and(|v| v == "1");
        let key = std::env::var(API_KEY_ENV).ok();
        Self::new(config, key, offline, Arc::new(ReqwestTransport::default()))
    }

    pub fn new(
        config: BackendConfig,
        api_key: Option<String>,
        offline: bool,
        transport: Arc<dyn HttpTransport>,
    ) -> Result<Self, GatewayError> {
        if offline {
            return Err(GatewayError::Offline);
        }
        config.validate()?;
        let api_key = api_key.filter(|k| !k.trim().is_empty()).ok_or(GatewayError::CredentialMissing)?;
        let policy = RetryPolicy::with_retries(config.max_retries);
        Ok(LiveBackend { config, api_key, policy, transport })
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn request_body(&self, req: &CompletionRequest) -> Value {
        json!({
            "model": req.model_id,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": req.prompt.text}],
        })
    }
}

fn completion_text(body: &str) -> Result<String, GatewayError> {
    let value: Value = serde_json::from_str(body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::MalformedResponse("missing choices[0].message.content".into()))
}

#[async_trait]
impl CompletionBackend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        let body = self.request_body(req);
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let started = Instant::now();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let outcome = self.transport.post_json(&self.config.endpoint_url, &self.api_key, &body, timeout).await;
            let failure = match outcome {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return Ok(CompletionResult {
                        text: completion_text(&reply.body)?,
                        source: Source::Network,
                        latency_ms: started.elapsed().as_millis() as u64,
                        model_id: req.model_id.clone(),
                        request_hash: req.request_hash(),
                    });
                }
                Ok(reply) if is_transient(reply.status) => format!("status {}", reply.status),
                Ok(reply) => return Err(GatewayError::NonTransientApiError { status: reply.status, body: reply.body }),
                Err(e) if e.timed_out => format!("timeout: {}", e.message),
                Err(e) => return Err(GatewayError::TransportFailure { attempts: attempt, message: e.message }),
            };
            if attempt > self.policy.max_retries {
                return Err(GatewayError::TransportFailure { attempts: attempt, message: failure });
            }
            let delay = backoff_delay_ms(&self.policy, attempt - 1, rand::thread_rng().gen());
            tracing::warn!(attempt, delay_ms = delay, %failure, "retrying completion request");
            tokio::time::sleep(Duration::from_millis(delay)).await;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;
    use std::sync::Mutex;

    use sldx_core::prompting::{PromptKind, RenderedPrompt};

    use super::*;

    /// Replies from a fixed list and records every call.
    #[derive(Default)]
    struct FakeTransport {
        replies: Mutex<VecDeque<Result<HttpReply, TransportError>>>,
        calls: Mutex<Vec<Value>>,
    }

    impl FakeTransport {
        fn with(replies: Vec<Result<HttpReply, TransportError>>) -> Arc<Self> {
            Arc::new(FakeTransport { replies: Mutex::new(replies.into()), calls: Mutex::default() })
        }

        fn calls(&self) -> usize {
            self.calls.lock().unwrap().len()
        }
    }

    #[async_trait]
    impl HttpTransport for FakeTransport {
        async fn post_json(
            &self,
            _: &str,
            bearer: &str,
            body: &Value,
            _: Duration,
        ) -> Result<HttpReply, TransportError> {
            assert_eq!(bearer, "k");
            self.calls.lock().unwrap().push(body.clone());
            self.replies.lock().unwrap().pop_front().expect("unexpected extra call")
        }
    }

    fn ok(text: &str) -> Result<HttpReply, TransportError> {
        Ok(HttpReply {
            status: 200,
            body: json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string(),
        })
    }

    fn status(code: u16) -> Result<HttpReply, TransportError> {
        Ok(HttpReply { status: code, body: "err".into() })
    }

    fn timeout() -> Result<HttpReply, TransportError> {
        Err(TransportError { timed_out: true, message: "deadline".into() })
    }

    fn backend(transport: Arc<FakeTransport>, retries: u32) -> LiveBackend {
        let config = BackendConfig { backend: BackendKind::Live, max_retries: retries, ..Default::default() };
        LiveBackend::new(config, Some("k".into()), false, transport)
            .unwrap()
            .with_policy(RetryPolicy { base_ms: 1, ..RetryPolicy::with_retries(retries) })
    }

    fn request() -> CompletionRequest {
        CompletionRequest::new(RenderedPrompt::new(PromptKind::Diagnosis, "E: hi\nP: hi".into(), false), "gpt-4")
    }

    #[test]
    fn credential_and_offline_checked_first() {
        let t = FakeTransport::with(vec![]);
        let config = BackendConfig { backend: BackendKind::Live, ..Default::default() };
        assert!(matches!(
            LiveBackend::new(config.clone(), None, false, t.clone()),
            Err(GatewayError::CredentialMissing)
        ));
        assert!(matches!(
            LiveBackend::new(config.clone(), Some(" ".into()), false, t.clone()),
            Err(GatewayError::CredentialMissing)
        ));
        assert!(matches!(LiveBackend::new(config, Some("k".into()), true, t.clone()), Err(GatewayError::Offline)));
        assert_eq!(t.calls(), 0);
    }

    #[tokio::test]
    async fn request_shape() {
        let t = FakeTransport::with(vec![ok("Yes")]);
        let r = backend(t.clone(), 0).complete(&request()).await.unwrap();
        assert_eq!(r.text, "Yes");
        assert_eq!(r.source, Source::Network);
        let body = &t.calls.lock().unwrap()[0];
        assert_eq!(body["model"], "gpt-4");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"].as_array().unwrap().len(), 1);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "E: hi\nP: hi");
    }

    #[tokio::test]
    async fn transient_failures_are_retried() {
        let t = FakeTransport::with(vec![status(429), timeout(), status(503), ok("No")]);
        let r = backend(t.clone(), 3).complete(&request()).await.unwrap();
        assert_eq!(r.text, "No");
        assert_eq!(t.calls(), 4);
    }

    #[tokio::test]
    async fn retries_are_bounded() {
        let t = FakeTransport::with(vec![status(500), status(502), status(500)]);
        let err = backend(t.clone(), 2).complete(&request()).await.unwrap_err();
        assert!(matches!(err, GatewayError::TransportFailure { attempts: 3, .. }), "{err}");
        assert_eq!(t.calls(), 3);
    }

    #[tokio::test]
    async fn client_errors_are_not_retried() {
        let t = FakeTransport::with(vec![status(401)]);
        let err = backend(t.clone(), 5).complete(&request()).await.unwrap_err();
        assert!(matches!(err, GatewayError::NonTransientApiError { status: 401, .. }));
        assert_eq!(t.calls(), 1);
    }

    #[tokio::test]
    async fn malformed_body() {
        let t = FakeTransport::with(vec![Ok(HttpReply { status: 200, body: "{}".into() })]);
        assert!(matches!(backend(t, 0).complete(&request()).await, Err(GatewayError::MalformedResponse(_))));
    }

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::with_retries(8);
        assert_eq!(backoff_delay_ms(&p, 0, 0.5), 500);
        assert_eq!(backoff_delay_ms(&p, 1, 0.5), 1000);
        assert_eq!(backoff_delay_ms(&p, 3, 0.5), 4000);
        assert_eq!(backoff_delay_ms(&p, 0, 0.0), 400);
        assert_eq!(backoff_delay_ms(&p, 0, 1.0), 600);
        for retry in 0..8 {
            for u in [0.0, 0.3, 0.999] {
                let d = backoff_delay_ms(&p, retry, u) as f64;
                let nominal = 500.0 * 2f64.powi(retry as i32);
                assert!(d >= nominal * 0.8 - 0.5 && d <= nominal * 1.2 + 0.5);
            }
        }
    }
}
