use std::collections::BTreeMap;
use std::time::Instant;

use sldx_core::classifier::{
    aggregate_feature_labels, aggregate_verdict_values, classify_features, AggregationMode, ScenarioOutcome,
};
use sldx_core::corpus::{load_corpus, BinaryLabel, FeatureSet, LoadOptions, SessionTranscript};
use sldx_core::prompting::{build_prompt, PromptKind};
use sldx_core::response_parser::{parse_features, parse_verdict_with, ParseOptions, VerdictValue};
use sldx_gateway::{build_backend, run_batch, CompletionRequest, ResponseCache, Script};

use crate::args::{RunArgs, Task};
use crate::config::{config_hash, snapshot_text, RunConfig};
use crate::error::{CliError, CliResult};
use crate::store::{
    save_run, validate_run_id, Counters, RunRecord, RunStats, ScenarioRecord, SessionRecord, RUN_RECORD_VERSION,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn default_run_id(snapshot: &BTreeMap<String, String>) -> String {
    format!("{}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%SZ"), config_hash(snapshot))
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Session-level label and feature union from filled-in scenario records.
pub fn finish_session(
    session: &SessionTranscript,
    scenarios: Vec<ScenarioRecord>,
    task: Task,
    mode: AggregationMode,
) -> SessionRecord {
    let (predicted_label, features) = match task {
        Task::Diagnose => {
            let label = aggregate_verdict_values(scenarios.iter().filter_map(|r| r.verdict)).ok().map(|agg| agg.label);
            (label, None)
        }
        Task::Features => {
            let outcomes: Vec<ScenarioOutcome> = scenarios
                .iter()
                .filter_map(|r| r.features.map(|f| ScenarioOutcome::from_features(r.scenario, f)))
                .collect();
            let label = aggregate_feature_labels(&outcomes, mode).ok();
            let union = scenarios.iter().filter_map(|r| r.features).fold(FeatureSet::empty(), |acc, f| acc.union(f));
            (label, Some(union))
        }
    };
    SessionRecord {
        subject_id: session.subject_id.clone(),
        session_id: session.session_id.clone(),
        true_label: session.true_label(),
        predicted_label,
        features,
        scenarios,
    }
}

pub fn run(args: &RunArgs) -> CliResult {
    let config = RunConfig::resolve(args)?;
    let snapshot = config.snapshot();
    let run_id = args.run_id.clone().unwrap_or_else(|| default_run_id(&snapshot));
    validate_run_id(&run_id)?;

    let corpus = load_corpus(&config.corpus_path, LoadOptions::default())?;
    let script = config.script_path.as_deref().map(Script::load).transpose()?;
    let backend = build_backend(&config.backend, script)?;
    let cache = ResponseCache::open(&config.backend.cache_dir)?;
    let kind = match config.task {
        Task::Diagnose => PromptKind::Diagnosis,
        Task::Features => PromptKind::FeatureExtraction,
    };

    let started_at = now_rfc3339();
    let clock = Instant::now();
    let mut counters = Counters { sessions: corpus.sessions.len(), ..Counters::default() };

    // one record per runnable scenario; `slots` maps each request back to its record
    let mut records: Vec<Vec<ScenarioRecord>> = Vec::with_capacity(corpus.sessions.len());
    let mut requests = Vec::new();
    let mut slots = Vec::new();
    for (si, session) in corpus.sessions.iter().enumerate() {
        let mut session_records = Vec::new();
        for (scenario, dialogue) in &session.dialogues {
            if !config.includes(*scenario) {
                continue;
            }
            if dialogue.is_degenerate() {
                counters.skipped_degenerate += 1;
                continue;
            }
            counters.requests += 1;
            let mut rec = ScenarioRecord::new(*scenario);
            match build_prompt(kind, dialogue, config.max_prompt_chars) {
                Ok(prompt) => {
                    rec.prompt_hash = Some(prompt.content_hash.to_hex());
                    rec.truncated = prompt.truncated;
                    counters.truncated += prompt.truncated as usize;
                    slots.push((si, session_records.len()));
                    requests.push(CompletionRequest::new(prompt, config.backend.model_id.clone()));
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    counters.failed += 1;
                }
            }
            session_records.push(rec);
        }
        records.push(session_records);
    }
    if counters.requests == 0 {
        return Err(CliError::domain("no runnable dialogues in the selected scenarios"));
    }

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::domain(format!("cannot start async runtime: {e}")))?;
    let results = runtime.block_on(run_batch(backend.as_ref(), Some(&cache), &requests, config.parallelism));

    let mut stats = RunStats { started_at, ..RunStats::default() };
    let parse_options = ParseOptions { strict: config.strict_parse };
    for ((si, ri), result) in slots.into_iter().zip(results) {
        let rec = &mut records[si][ri];
        match result {
            Ok(r) => {
                *stats.sources.entry(format!("{:?}", r.source).to_lowercase()).or_default() += 1;
                stats.total_latency_ms += r.latency_ms;
                match config.task {
                    Task::Diagnose => {
                        let v = parse_verdict_with(&r.text, parse_options);
                        if v.value == VerdictValue::Indeterminate {
                            counters.indeterminate += 1;
                        }
                        rec.label = Some(BinaryLabel::from_bool(v.value == VerdictValue::Affirmative));
                        rec.verdict = Some(v.value);
                    }
                    Task::Features => {
                        let parsed = parse_features(&r.text);
                        counters.parse_warnings += parsed.warnings.len();
                        rec.label = Some(classify_features(parsed.features));
                        rec.features = Some(parsed.features);
                        rec.warnings = parsed.warnings;
                    }
                }
            }
            Err(e) => {
                tracing::warn!(scenario = %rec.scenario, error = %e, "completion failed");
                rec.error = Some(e.to_string());
                counters.failed += 1;
            }
        }
    }

    let sessions = corpus
        .sessions
        .iter()
        .zip(records)
        .map(|(s, recs)| finish_session(s, recs, config.task, config.aggregation_mode))
        .collect();
    let record = RunRecord {
        record_version: RUN_RECORD_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        run_id: run_id.clone(),
        task: config.task.name().into(),
        producer: config.backend.backend.to_string(),
        model_id: config.backend.model_id.clone(),
        config: snapshot.clone(),
        counters: counters.clone(),
        sessions,
    };
    stats.elapsed_ms = clock.elapsed().as_millis() as u64;
    let dir = save_run(&config.output_dir, &record, &stats, &snapshot_text(&snapshot))?;

    println!(
        "run {run_id}: {} sessions, {} requests, {} failed, {} indeterminate, {} degenerate skipped",
        counters.sessions, counters.requests, counters.failed, counters.indeterminate, counters.skipped_degenerate
    );
    println!("wrote {}", dir.display());
    if counters.failed * 2 > counters.requests {
        return Err(CliError::Degraded(format!(
            "batch degraded: {} of {} requests failed",
            counters.failed, counters.requests
        )));
    }
    Ok(())
}
