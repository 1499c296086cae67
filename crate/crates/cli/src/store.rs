//! Run store: `<out>/runs/<run_id>/` with `config.snapshot`, `run.json`, `run_stats.json`,
//! `results.csv` and `reports/`.
//!
//! `run.json` holds only what the inputs determine, so re-running against a warm cache
//! reproduces it byte for byte. Timing and completion sources go to `run_stats.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sldx_core::corpus::{BinaryLabel, FeatureSet, ScenarioId};
use sldx_core::response_parser::VerdictValue;

use crate::error::{CliError, CliResult};

pub const RUN_RECORD_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: ScenarioId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<BinaryLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl ScenarioRecord {
    pub fn new(scenario: ScenarioId) -> Self {
        ScenarioRecord {
            scenario,
            prompt_hash: None,
            verdict: None,
            features: None,
            label: None,
            error: None,
            warnings: Vec::new(),
            truncated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub subject_id: String,
    pub session_id: String,
    pub true_label: Option<BinaryLabel>,
    pub predicted_label: Option<BinaryLabel>,
    /// Union of scenario feature sets (feature runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureSet>,
    pub scenarios: Vec<ScenarioRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub sessions: usize,
    pub requests: usize,
    pub failed: usize,
    pub indeterminate: usize,
    pub parse_warnings: usize,
    pub skipped_degenerate: usize,
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_version: String,
    pub tool_version: String,
    pub run_id: String,
    /// `diagnose` or `features`.
    pub task: String,
    /// Backend name, or `oracle` for lexical-detector runs.
    pub producer: String,
    pub model_id: String,
    pub config: BTreeMap<String, String>,
    pub counters: Counters,
    pub sessions: Vec<SessionRecord>,
}

/// Wall-clock facts about a run, kept apart from the deterministic record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub started_at: String,
    pub elapsed_ms: u64,
    pub sources: BTreeMap<String, usize>,
    pub total_latency_ms: u64,
}

pub fn run_dir(out: &Path, run_id: &str) -> PathBuf {
    out.join("runs").join(run_id)
}

pub fn reports_dir(out: &Path, run_id: &str) -> PathBuf {
    run_dir(out, run_id).join("reports")
}

pub fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("record serializes") + "\n"
}

pub fn validate_run_id(run_id: &str) -> CliResult {
    let ok = !run_id.is_empty()
        && run_id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !run_id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(CliError::malformed(format!("invalid run id {run_id:?}: use letters, digits, '-', '_' or '.'")))
    }
}

pub fn results_csv(record: &RunRecord) -> String {
    let label = |l: Option<BinaryLabel>| l.map_or(String::new(), |l| l.value().to_string());
    let mut out = String::from("session_id,subject_id,true_label,predicted_label,features,scenarios,failed\n");
    for s in &record.sessions {
        let failed = s.scenarios.iter().filter(|r| r.error.is_some()).count();
        let features = s.features.map_or(String::new(), |f| f.to_codes(";"));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&s.session_id),
            csv_field(&s.subject_id),
            label(s.true_label),
            label(s.predicted_label),
            features,
            s.scenarios.len(),
            failed
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn save_run(out: &Path, record: &RunRecord, stats: &RunStats, snapshot_text: &str) -> CliResult<PathBuf> {
    let dir = run_dir(out, &record.run_id);
    write_file(&dir.join("config.snapshot"), snapshot_text)?;
    write_file(&dir.join("run.json"), &to_json(record))?;
    write_file(&dir.join("run_stats.json"), &to_json(stats))?;
    write_file(&dir.join("results.csv"), &results_csv(record))?;
    Ok(dir)
}

pub fn load_run(out: &Path, run_id: &str) -> CliResult<RunRecord> {
    validate_run_id(run_id)?;
    let path = run_dir(out, run_id).join("run.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let record: RunRecord =
        serde_json::from_str(&text).map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
    if record.record_version != RUN_RECORD_VERSION {
        return Err(CliError::malformed(format!(
            "{}: unsupported record_version {:?}",
            path.display(),
            record.record_version
        )));
    }
    Ok(record)
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    to_json(value)
}
