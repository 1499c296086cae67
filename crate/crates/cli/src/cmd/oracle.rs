use std::collections::BTreeMap;

use serde::Serialize;
use sldx_core::classifier::{classify_features, AggregationMode};
use sldx_core::corpus::{load_corpus, FeatureId, LoadOptions};
use sldx_core::lexical_oracle::{LexicalOracle, PronounConfig, DETECTABLE};

use crate::args::{OracleArgs, Task};
use crate::cmd::run::{default_run_id, finish_session, now_rfc3339, TOOL_VERSION};
use crate::cmd::synth::TruthFile;
use crate::config::snapshot_text;
use crate::error::{CliError, CliResult};
use crate::store::{
    reports_dir, save_run, to_json_string, validate_run_id, write_file, Counters, RunRecord, RunStats, ScenarioRecord,
    RUN_RECORD_VERSION,
};

pub const ORACLE_MODEL_ID: &str = "lexical-oracle";

#[derive(Debug, Default, Serialize)]
struct FeatureCheck {
    injected: u64,
    detected: u64,
    spurious: u64,
    sensitivity: Option<f64>,
}

#[derive(Debug, Serialize)]
struct OracleCheck {
    scenarios: u64,
    exact_matches: u64,
    missing_truth: Vec<String>,
    features: BTreeMap<FeatureId, FeatureCheck>,
}

pub fn oracle(args: &OracleArgs) -> CliResult {
    let corpus = load_corpus(&args.corpus, LoadOptions::default())?;
    let snapshot = BTreeMap::from([
        ("corpus".to_string(), args.corpus.display().to_string()),
        ("producer".to_string(), "oracle".to_string()),
        ("subject_name".to_string(), args.subject_name.clone().unwrap_or_default()),
        ("task".to_string(), Task::Features.name().to_string()),
    ]);
    let run_id = args.run_id.clone().unwrap_or_else(|| default_run_id(&snapshot));
    validate_run_id(&run_id)?;
    let detector = LexicalOracle {
        pronoun: PronounConfig { subject_name: args.subject_name.clone(), ..PronounConfig::default() },
        ..LexicalOracle::default()
    };

    let started_at = now_rfc3339();
    let mut counters = Counters { sessions: corpus.sessions.len(), ..Counters::default() };
    let mut sessions = Vec::new();
    for session in &corpus.sessions {
        let mut records = Vec::new();
        for (scenario, d) in &session.dialogues {
            if !scenario.is_included() {
                continue;
            }
            if d.is_degenerate() {
                counters.skipped_degenerate += 1;
                continue;
            }
            counters.requests += 1;
            let found = detector.detect_all(d);
            records.push(ScenarioRecord {
                features: Some(found),
                label: Some(classify_features(found)),
                ..ScenarioRecord::new(*scenario)
            });
        }
        sessions.push(finish_session(session, records, Task::Features, AggregationMode::PerScenarioOr));
    }
    let record = RunRecord {
        record_version: RUN_RECORD_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        run_id: run_id.clone(),
        task: Task::Features.name().into(),
        producer: "oracle".into(),
        model_id: ORACLE_MODEL_ID.into(),
        config: snapshot.clone(),
        counters: counters.clone(),
        sessions,
    };
    let stats = RunStats { started_at, ..RunStats::default() };
    let dir = save_run(&args.out, &record, &stats, &snapshot_text(&snapshot))?;
    println!(
        "oracle run {run_id}: {} sessions, {} dialogues, {} degenerate skipped",
        counters.sessions, counters.requests, counters.skipped_degenerate
    );
    println!("wrote {}", dir.display());

    let Some(truth_path) = &args.truth else {
        return Ok(());
    };
    let text = std::fs::read_to_string(truth_path).map_err(|e| CliError::io(truth_path, e))?;
    let truth: TruthFile =
        serde_json::from_str(&text).map_err(|e| CliError::malformed(format!("{}: {e}", truth_path.display())))?;
    let by_session: BTreeMap<&str, _> = truth.sessions.iter().map(|t| (t.session_id.as_str(), t)).collect();

    let mut check = OracleCheck {
        scenarios: 0,
        exact_matches: 0,
        missing_truth: Vec::new(),
        features: DETECTABLE.iter().map(|f| (*f, FeatureCheck::default())).collect(),
    };
    for s in &record.sessions {
        for r in &s.scenarios {
            let expected = by_session.get(s.session_id.as_str()).and_then(|t| t.scenarios.get(&r.scenario));
            let Some(&expected) = expected else {
                check.missing_truth.push(format!("{}/{}", s.session_id, r.scenario));
                continue;
            };
            let found = r.features.unwrap_or_default();
            check.scenarios += 1;
            check.exact_matches += (found == expected) as u64;
            for (f, c) in check.features.iter_mut() {
                match (expected.contains(*f), found.contains(*f)) {
                    (true, true) => {
                        c.injected += 1;
                        c.detected += 1;
                    }
                    (true, false) => c.injected += 1,
                    (false, true) => c.spurious += 1,
                    (false, false) => {}
                }
            }
        }
    }
    for c in check.features.values_mut() {
        c.sensitivity = (c.injected > 0).then(|| c.detected as f64 / c.injected as f64);
    }
    write_file(&reports_dir(&args.out, &run_id).join("oracle_check.json"), &to_json_string(&check))?;
    for (f, c) in &check.features {
        let sens = c.sensitivity.map_or("n/a".to_string(), |s| format!("{s:.4}"));
        println!("{f}: injected {} detected {} spurious {} sensitivity {sens}", c.injected, c.detected, c.spurious);
    }
    println!("{} of {} scenarios match the ground truth exactly", check.exact_matches, check.scenarios);

    if !check.missing_truth.is_empty() || check.exact_matches != check.scenarios {
        return Err(CliError::domain(format!(
            "oracle disagrees with ground truth on {} scenarios ({} without truth)",
            check.scenarios - check.exact_matches,
            check.missing_truth.len()
        )));
    }
    Ok(())
}
