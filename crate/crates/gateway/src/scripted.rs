use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sldx_core::digest::ContentHash;

use crate::{BackendKind, CompletionBackend, CompletionRequest, CompletionResult, GatewayError, Source};

/// One scripted answer. Entries with a `prompt_hash` answer any request whose prompt
/// hash or request hash equals it and are never consumed; the rest are served in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<ContentHash>,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u64>,
    /// Makes the entry fail with this message instead of answering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<String>,
}

impl ScriptEntry {
    pub fn keyed(prompt_hash: ContentHash, response_text: impl Into<String>) -> Self {
        ScriptEntry { prompt_hash: Some(prompt_hash), response_text: response_text.into(), delay_ms: None, fail: None }
    }

    pub fn queued(response_text: impl Into<String>) -> Self {
        ScriptEntry { prompt_hash: None, response_text: response_text.into(), delay_ms: None, fail: None }
    }
}

/// Script file contents: a JSON list of [`ScriptEntry`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Script {
    pub entries: Vec<ScriptEntry>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, GatewayError> {
        serde_json::from_str(text).map_err(|e| GatewayError::InvalidScript(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::InvalidScript(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes") + "\n"
    }

    pub fn merge(mut self, other: Script) -> Script {
        self.entries.extend(other.entries);
        self
    }
}

#[derive(Debug)]
pub struct ScriptedBackend {
    keyed: HashMap<ContentHash, ScriptEntry>,
    queue: Mutex<VecDeque<ScriptEntry>>,
}

impl ScriptedBackend {
    /// Later keyed entries replace earlier ones with the same hash.
    pub fn new(script: Script) -> Self {
        let mut keyed = HashMap::new();
        let mut queue = VecDeque::new();
        for entry in script.entries {
            match entry.prompt_hash {
                Some(h) => {
                    keyed.insert(h, entry);
                }
                None => queue.push_back(entry),
            }
        }
        ScriptedBackend { keyed, queue: Mutex::new(queue) }
    }

    pub fn remaining_queued(&self) -> usize {
        self.queue.lock().expect("script queue").len()
    }

    fn resolve(&self, req: &CompletionRequest) -> Result<ScriptEntry, GatewayError> {
        let request_hash = req.request_hash();
        if let Some(e) = self.keyed.get(&request_hash).or_else(|| self.keyed.get(&req.prompt.content_hash)) {
            return Ok(e.clone());
        }
        self.queue.lock().expect("script queue").pop_front().ok_or(GatewayError::ScriptExhausted(request_hash))
    }
}

#[async_trait]
impl CompletionBackend for ScriptedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        let started = Instant::now();
        // resolved before the first await, so queue order follows first-poll order
        let entry = self.resolve(req)?;
        if let Some(ms) = entry.delay_ms {
            tokio::time::sleep(Duration::from_millis(ms)).await;
        }
        if let Some(message) = entry.fail {
            return Err(GatewayError::Injected(message));
        }
        Ok(CompletionResult {
            text: entry.response_text,
            source: Source::Script,
            latency_ms: started.elapsed().as_millis() as u64,
            model_id: req.model_id.clone(),
            request_hash: req.request_hash(),
        })
    }
}

/// Cache-only backend: every request must already be cached, so reaching it is a miss.
#[derive(Debug, Default)]
pub struct ReplayBackend;

#[async_trait]
impl CompletionBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        Err(GatewayError::CacheMiss(req.request_hash()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sldx_core::prompting::{prompt_hash, PromptKind, RenderedPrompt};

    fn request(text: &str) -> CompletionRequest {
        CompletionRequest::new(RenderedPrompt::new(PromptKind::Diagnosis, text.to_string(), false), "m")
    }

    #[tokio::test]
    async fn keyed_lookup() {
        let p = request("prompt one");
        let backend = ScriptedBackend::new(Script {
            entries: vec![ScriptEntry::keyed(prompt_hash(PromptKind::Diagnosis, "prompt one"), "Yes")],
        });
        let r = backend.complete(&p).await.unwrap();
        assert_eq!(r.text, "Yes");
        assert_eq!(r.source, Source::Script);
        assert_eq!(r.request_hash, p.request_hash());
        // keyed entries are reusable
        assert_eq!(backend.complete(&p).await.unwrap().text, "Yes");
        assert!(matches!(backend.complete(&request("other")).await, Err(GatewayError::ScriptExhausted(_))));
    }

    #[tokio::test]
    async fn request_hash_key_wins_over_prompt_hash() {
        let p = request("x");
        let backend = ScriptedBackend::new(Script {
            entries: vec![
                ScriptEntry::keyed(p.prompt.content_hash, "by prompt"),
                ScriptEntry::keyed(p.request_hash(), "by request"),
            ],
        });
        assert_eq!(backend.complete(&p).await.unwrap().text, "by request");
    }

    #[tokio::test]
    async fn fifo_then_exhausted() {
        let backend =
            ScriptedBackend::new(Script { entries: vec![ScriptEntry::queued("first"), ScriptEntry::queued("second")] });
        assert_eq!(backend.complete(&request("a")).await.unwrap().text, "first");
        assert_eq!(backend.complete(&request("a")).await.unwrap().text, "second");
        assert_eq!(backend.remaining_queued(), 0);
        assert!(matches!(backend.complete(&request("a")).await, Err(GatewayError::ScriptExhausted(_))));
        let empty = ScriptedBackend::new(Script::default());
        assert!(matches!(empty.complete(&request("a")).await, Err(GatewayError::ScriptExhausted(_))));
    }

    #[tokio::test]
    async fn injected_failure() {
        let backend = ScriptedBackend::new(Script {
            entries: vec![ScriptEntry { fail: Some("boom".into()), ..ScriptEntry::queued("") }],
        });
        assert!(matches!(backend.complete(&request("a")).await, Err(GatewayError::Injected(m)) if m == "boom"));
    }

    #[test]
    fn script_file_format() {
        let h = prompt_hash(PromptKind::Diagnosis, "p");
        let text = format!(
            r#"[{{"prompt_hash": "{}", "response_text": "No"}}, {{"response_text": "Yes", "delay_ms": 5}}]"#,
            h.to_hex()
        );
        let script = Script::parse(&text).unwrap();
        assert_eq!(script.entries.len(), 2);
        assert_eq!(script.entries[0].prompt_hash, Some(h));
        assert_eq!(script.entries[1].delay_ms, Some(5));
        assert_eq!(Script::parse(&script.to_json()).unwrap(), script);
        assert!(matches!(Script::parse(r#"[{"text": "x"}]"#), Err(GatewayError::InvalidScript(_))));
        assert!(matches!(
            Script::parse(r#"[{"prompt_hash": "zz", "response_text": ""}]"#),
            Err(GatewayError::InvalidScript(_))
        ));
    }

    #[test]
    fn bundled_case_study_script_parses() {
        let script = Script::parse(sldx_core::fixtures::SCRIPTED_CASE_STUDIES).unwrap();
        assert_eq!(script.entries.len(), 2);
        assert!(script.entries.iter().all(|e| e.prompt_hash.is_some()));
    }

    #[tokio::test]
    async fn replay_backend_always_misses() {
        assert!(matches!(ReplayBackend.complete(&request("a")).await, Err(GatewayError::CacheMiss(_))));
    }
}
