//! Bundled reference data: two annotated case-study dialogues, canned model answers for
//! them, the A4 scale and the per-scenario feature prevalence table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_corpus, FeatureId, FeatureSet, LoadOptions, ScenarioDialogue, ScenarioId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unknown fixture {0:?} (expected table5 or table6)")]
    UnknownFixture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixtureSource {
    Table5,
    Table6,
}

impl FixtureSource {
    pub fn name(self) -> &'static str {
        match self {
            FixtureSource::Table5 => "table5",
            FixtureSource::Table6 => "table6",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseStudyFixture {
    pub dialogue: ScenarioDialogue,
    pub annotated_features: FeatureSet,
    pub source: FixtureSource,
}

pub const TABLE5_CORPUS: &str = include_str!("../fixtures/table5.json");
pub const TABLE6_CORPUS: &str = include_str!("../fixtures/table6.json");
/// Script for the scripted backend, keyed by the feature-extraction prompt hash of each
/// case-study dialogue.
pub const SCRIPTED_CASE_STUDIES: &str = include_str!("../fixtures/scripted_case_studies.json");

pub const FIXTURE_NAMES: [&str; 2] = ["table5", "table6"];

/// Canned feature-extraction answer listing the annotated features of a case study.
pub fn case_study_answer(source: FixtureSource) -> &'static str {
    match source {
        FixtureSource::Table5 => concat!(
            "Echoic Repetition (F1): the patient repeats the examiner's question back before answering.\n",
            "Unconventional Content (F2): descriptions of where to live use unusual word combinations.\n",
            "Pronoun Displacement (F3): the patient refers to their own home with a third-person pronoun.\n",
            "Stereotyped Media Quoting (F9): fragments appear to be quoted from an outside media source.\n",
            "Clichéd Verbal Substitutions (F10): stock expressions stand in for direct answers.\n",
        ),
        FixtureSource::Table6 => concat!(
            "Unconventional Content (F2): some phrases about school are unusually chosen.\n",
            "Superfluous Phrase Attachment (F6): fillers such as 'whatever' are attached without adding meaning.\n",
            "Clichéd Verbal Substitutions (F10): a stock expression replaces a description of feelings.\n",
        ),
    }
}

pub fn load_fixture(name: &str) -> Result<CaseStudyFixture, FixtureError> {
    let (text, source, annotated) = match name {
        "table5" => (
            TABLE5_CORPUS,
            FixtureSource::Table5,
            FeatureSet::from([FeatureId::F1, FeatureId::F2, FeatureId::F3, FeatureId::F9, FeatureId::F10]),
        ),
        "table6" => {
            (TABLE6_CORPUS, FixtureSource::Table6, FeatureSet::from([FeatureId::F2, FeatureId::F6, FeatureId::F10]))
        }
        other => return Err(FixtureError::UnknownFixture(other.to_string())),
    };
    let corpus = parse_corpus(text, LoadOptions { strict: true }).expect("bundled fixture parses");
    let dialogue = corpus.sessions[0].dialogues.values().next().expect("bundled fixture has a dialogue").clone();
    Ok(CaseStudyFixture { dialogue, annotated_features: annotated, source })
}

/// Short paraphrases of the four A4 score levels.
pub const A4_SCALE: [(u8, &str); 4] = [
    (0, "little or no stereotyped or idiosyncratic wording"),
    (1, "somewhat repetitive or formal wording with occasional odd phrases; language stays largely flexible"),
    (2, "frequent stereotyped or odd phrases alongside some spontaneous language"),
    (3, "mostly stereotyped or odd speech with little spontaneous language"),
];

/// Per-scenario feature prevalence (scenario id, F1..F10).
pub const TABLE7: [(u8, [f64; 10]); 11] = [
    (3, [0.45, 0.64, 0.52, 0.32, 0.39, 0.59, 0.48, 0.41, 0.39, 0.36]),
    (4, [0.57, 0.59, 0.45, 0.32, 0.41, 0.59, 0.57, 0.39, 0.30, 0.32]),
    (5, [0.43, 0.55, 0.41, 0.23, 0.43, 0.61, 0.48, 0.27, 0.25, 0.32]),
    (6, [0.41, 0.34, 0.25, 0.18, 0.36, 0.55, 0.43, 0.23, 0.07, 0.30]),
    (7, [0.48, 0.39, 0.34, 0.20, 0.36, 0.50, 0.39, 0.30, 0.20, 0.30]),
    (9, [0.57, 0.43, 0.30, 0.20, 0.32, 0.48, 0.41, 0.23, 0.16, 0.20]),
    (11, [0.43, 0.39, 0.32, 0.14, 0.32, 0.59, 0.55, 0.32, 0.18, 0.32]),
    (12, [0.45, 0.55, 0.41, 0.18, 0.36, 0.55, 0.61, 0.41, 0.07, 0.32]),
    (13, [0.55, 0.36, 0.25, 0.02, 0.36, 0.48, 0.30, 0.25, 0.02, 0.23]),
    (14, [0.36, 0.41, 0.18, 0.11, 0.23, 0.34, 0.20, 0.11, 0.07, 0.11]),
    (15, [0.64, 0.57, 0.32, 0.36, 0.52, 0.64, 0.57, 0.32, 0.30, 0.20]),
];

/// Session count at which every table value is reproduced by an integer count.
pub const TABLE7_SESSIONS: usize = 44;

/// Builds per-scenario feature sets whose prevalence renders to [`TABLE7`] at two decimals.
/// Session `k` carries feature `f` iff `k < round(value · n)`.
pub fn table7_matrix(n: usize) -> BTreeMap<ScenarioId, Vec<FeatureSet>> {
    TABLE7
        .iter()
        .map(|(id, values)| {
            let counts: Vec<usize> = values.iter().map(|v| (v * n as f64).round() as usize).collect();
            let sessions =
                (0..n).map(|k| FeatureId::ALL.iter().filter(|f| k < counts[f.index()]).copied().collect()).collect();
            (ScenarioId::new(*id as i64).expect("table scenario"), sessions)
        })
        .collect()
}
