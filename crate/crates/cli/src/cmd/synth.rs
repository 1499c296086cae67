use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sldx_core::classifier::classify_features;
use sldx_core::corpus::{canonical_feature, write_corpus, FeatureSet};
use sldx_core::lexical_oracle::{generate_corpus, CorpusSynthSpec, SessionTruth, SynthError};
use sldx_core::prompting::{build_diagnosis_prompt, build_feature_prompt};
use sldx_gateway::{Script, ScriptEntry};

use crate::args::SynthArgs;
use crate::error::{CliError, CliResult};
use crate::store::{to_json_string, write_file};

/// Ground-truth sidecar written next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub features: FeatureSet,
    pub turns: usize,
    pub random_subsets: bool,
    pub sessions: Vec<SessionTruth>,
}

pub fn parse_feature_list(list: &str) -> CliResult<FeatureSet> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| canonical_feature(t).map_err(|e| CliError::malformed(e.to_string())))
        .collect()
}

pub fn truth_path(args: &SynthArgs) -> PathBuf {
    args.truth.clone().unwrap_or_else(|| {
        let mut name = args.out.clone().into_os_string();
        name.push(".truth.json");
        PathBuf::from(name)
    })
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let features = parse_feature_list(&args.features)?;
    let spec = CorpusSynthSpec {
        seed: args.seed,
        features,
        turns: args.turns,
        sessions: args.sessions,
        scenarios_per_session: args.scenarios_per_session,
        random_subsets: args.random_subsets,
    };
    let corpus = generate_corpus(&spec).map_err(|e| match e {
        SynthError::UndetectableFeatureRequested(_) => CliError::domain(e.to_string()),
        other => CliError::malformed(other.to_string()),
    })?;
    write_corpus(&args.out, &corpus.sessions)?;

    let truth = TruthFile {
        seed: args.seed,
        features,
        turns: args.turns,
        random_subsets: args.random_subsets,
        sessions: corpus.truth.clone(),
    };
    let truth_out = truth_path(args);
    write_file(&truth_out, &to_json_string(&truth))?;

    if let Some(path) = &args.script {
        let mut entries = Vec::new();
        for (session, t) in corpus.sessions.iter().zip(&corpus.truth) {
            for (scenario, d) in &session.dialogues {
                let injected = t.scenarios.get(scenario).copied().unwrap_or_default();
                let prompt = build_diagnosis_prompt(d).map_err(|e| CliError::domain(e.to_string()))?;
                let verdict = if classify_features(injected).is_positive() { "Yes" } else { "No" };
                entries.push(ScriptEntry::keyed(prompt.content_hash, verdict));
                let prompt = build_feature_prompt(d).map_err(|e| CliError::domain(e.to_string()))?;
                let codes = if injected.is_empty() { "None".to_string() } else { injected.to_codes(", ") };
                entries.push(ScriptEntry::keyed(prompt.content_hash, codes));
            }
        }
        write_file(path, &Script { entries }.to_json())?;
        println!("wrote script {}", path.display());
    }

    let positive = corpus.sessions.iter().filter(|s| s.true_label().is_some_and(|l| l.is_positive())).count();
    println!(
        "wrote {} sessions ({positive} positive) to {}, truth {}",
        corpus.sessions.len(),
        args.out.display(),
        truth_out.display()
    );
    Ok(())
}
