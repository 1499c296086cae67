use std::num::NonZeroUsize;
use std::time::Instant;

use futures::stream::{self, StreamExt};

use crate::{CompletionBackend, CompletionRequest, CompletionResult, GatewayError, ResponseCache, Source};

/// Serves from `cache` when possible; otherwise asks the backend and stores the answer.
pub async fn cached_complete(
    backend: &dyn CompletionBackend,
    cache: Option<&ResponseCache>,
    req: &CompletionRequest,
) -> Result<CompletionResult, GatewayError> {
    let Some(cache) = cache else {
        return backend.complete(req).await;
    };
    let started = Instant::now();
    let key = req.request_hash();
    if let Some(entry) = cache.get(&key)? {
        return Ok(CompletionResult {
            text: entry.text,
            source: Source::Cache,
            latency_ms: started.elapsed().as_millis() as u64,
            model_id: req.model_id.clone(),
            request_hash: key,
        });
    }
    let result = backend.complete(req).await?;
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    cache.put(&req.model_id, req.prompt.content_hash, &result.text, created_at)?;
    Ok(result)
}

/// Results come back in input order with at most `parallelism` requests in flight.
/// Each failure is reported in its own slot.
pub async fn run_batch(
    backend: &dyn CompletionBackend,
    cache: Option<&ResponseCache>,
    reqs: &[CompletionRequest],
    parallelism: NonZeroUsize,
) -> Vec<Result<CompletionResult, GatewayError>> {
    stream::iter(reqs.iter().map(|req| cached_complete(backend, cache, req)))
        .buffered(parallelism.get())
        .collect()
        .await
}
