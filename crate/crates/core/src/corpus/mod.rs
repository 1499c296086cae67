//! Interview corpus data model: scenarios, role-labeled utterances, sessions and labels.

mod feature;
mod schema;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use feature::{canonical_feature, FeatureId, FeatureSet};
pub use schema::{
    load_corpus, parse_corpus, serialize_corpus, write_corpus, LoadOptions, LoadedCorpus, CORPUS_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read corpus file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed corpus file: {0}")]
    MalformedFile(String),
    #[error("schema violation in session {session_id:?} at {path}: {message}")]
    SchemaViolation { session_id: Option<String>, path: String, message: String },
    #[error("duplicate session_id {0:?}")]
    DuplicateSessionId(String),
    #[error("value {0} is outside the A4 range 0..=3")]
    OutOfRange(i64),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("unknown scenario id {0}")]
    UnknownScenario(i64),
}

/// Names of the fifteen interview scenarios, indexed by id - 1.
const SCENARIO_NAMES: [&str; 15] = [
    "Construction Task",
    "Telling a Story from a Book",
    "Description of a Picture",
    "Conversation and Reporting",
    "Current Work and School",
    "Social Difficulties and Annoyance",
    "Emotions",
    "Demonstration Task",
    "Cartoons",
    "Break",
    "Daily Living",
    "Friends, Relationships, and Marriage",
    "Loneliness",
    "Plans and Hopes",
    "Creating a Story",
];

/// Scenarios with examiner-patient dialogue; 1, 2, 8 and 10 are never analysed.
const INCLUDED: [u8; 11] = [3, 4, 5, 6, 7, 9, 11, 12, 13, 14, 15];

/// One of the fifteen structured interview scenarios (1..=15).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScenarioId(u8);

impl ScenarioId {
    pub fn new(id: i64) -> Result<Self, CorpusError> {
        if (1..=15).contains(&id) {
            Ok(ScenarioId(id as u8))
        } else {
            Err(CorpusError::UnknownScenario(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        SCENARIO_NAMES[self.0 as usize - 1]
    }

    pub fn is_included(self) -> bool {
        INCLUDED.contains(&self.0)
    }

    pub fn all() -> impl Iterator<Item = ScenarioId> {
        (1..=15).map(ScenarioId)
    }

    pub fn included() -> impl Iterator<Item = ScenarioId> {
        INCLUDED.into_iter().map(ScenarioId)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

impl Serialize for ScenarioId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for ScenarioId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let id = i64::deserialize(deserializer)?;
        ScenarioId::new(id).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerRole {
    Examiner,
    Patient,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub role: SpeakerRole,
    pub text: String,
    pub start_ms: Option<i64>,
    pub end_ms: Option<i64>,
    /// Ordinal within the owning dialogue.
    pub index: usize,
}

impl Utterance {
    pub fn new(role: SpeakerRole, text: impl Into<String>) -> Self {
        Utterance { role, text: text.into(), start_ms: None, end_ms: None, index: 0 }
    }

    pub fn with_times(mut self, start_ms: i64, end_ms: i64) -> Self {
        self.start_ms = Some(start_ms);
        self.end_ms = Some(end_ms);
        self
    }
}

/// The transcript of one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDialogue {
    pub scenario: ScenarioId,
    pub utterances: Vec<Utterance>,
}

impl ScenarioDialogue {
    /// Builds a dialogue and renumbers utterance indices 0..n-1.
    pub fn new(scenario: ScenarioId, utterances: Vec<Utterance>) -> Self {
        let mut d = ScenarioDialogue { scenario, utterances };
        d.reindex();
        d
    }

    pub fn reindex(&mut self) {
        for (i, u) in self.utterances.iter_mut().enumerate() {
            u.index = i;
        }
    }

    pub fn has_role(&self, role: SpeakerRole) -> bool {
        self.utterances.iter().any(|u| u.role == role)
    }

    /// Single-speaker (or empty) dialogues cannot be analysed.
    pub fn is_degenerate(&self) -> bool {
        !(self.has_role(SpeakerRole::Patient) && self.has_role(SpeakerRole::Examiner))
    }

    pub fn patient_utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| u.role == SpeakerRole::Patient)
    }
}

/// One subject's interview, split by scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub subject_id: String,
    pub session_id: String,
    /// Ground-truth A4 item score. Kept wide so out-of-range values survive to validation.
    pub a4_true: Option<i64>,
    pub dialogues: BTreeMap<ScenarioId, ScenarioDialogue>,
}

impl SessionTranscript {
    pub fn true_label(&self) -> Option<BinaryLabel> {
        self.a4_true.and_then(|a4| binarize_a4(a4).ok())
    }
}

/// Binarized A4 outcome: 0 when A4 = 0, 1 when A4 > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum BinaryLabel {
    #[default]
    Negative,
    Positive,
}

impl BinaryLabel {
    pub fn value(self) -> u8 {
        match self {
            BinaryLabel::Negative => 0,
            BinaryLabel::Positive => 1,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            BinaryLabel::Positive
        } else {
            BinaryLabel::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == BinaryLabel::Positive
    }
}

impl TryFrom<u8> for BinaryLabel {
    type Error = CorpusError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(BinaryLabel::Negative),
            1 => Ok(BinaryLabel::Positive),
            other => Err(CorpusError::OutOfRange(other as i64)),
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for BinaryLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.value())
    }
}

impl<'de> Deserialize<'de> for BinaryLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        BinaryLabel::try_from(u8::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

pub fn binarize_a4(a4: i64) -> Result<BinaryLabel, CorpusError> {
    match a4 {
        0 => Ok(BinaryLabel::Negative),
        1..=3 => Ok(BinaryLabel::Positive),
        other => Err(CorpusError::OutOfRange(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    A4OutOfRange,
    EmptySessionId,
    EmptyText,
    NegativeTimestamp,
    TimestampOrder,
    IndexGap,
    ScenarioMismatch,
    UnknownRole,
    DegenerateDialogue,
}

impl ViolationKind {
    /// Degenerate dialogues are reported and skipped; every other kind rejects the session.
    pub fn is_fatal(self) -> bool {
        !matches!(self, ViolationKind::DegenerateDialogue)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub session_id: String,
    /// Location within the session, e.g. `scenarios[S3].utterances[2]`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.session_id, self.location, self.message)
    }
}

pub fn validate_session(s: &SessionTranscript) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, location: String, message: String| {
        out.push(Violation { kind, session_id: s.session_id.clone(), location, message })
    };

    if s.session_id.trim().is_empty() {
        push(ViolationKind::EmptySessionId, "session_id".into(), "session_id is empty".into());
    }
    if let Some(a4) = s.a4_true {
        if !(0..=3).contains(&a4) {
            push(ViolationKind::A4OutOfRange, "a4_true".into(), format!("a4_true out of range: {a4}"));
        }
    }

    for (scenario, dialogue) in &s.dialogues {
        let base = format!("scenarios[{scenario}]");
        if dialogue.scenario != *scenario {
            push(ViolationKind::ScenarioMismatch, base.clone(), format!("dialogue is tagged {}", dialogue.scenario));
        }
        for (pos, u) in dialogue.utterances.iter().enumerate() {
            let loc = format!("{base}.utterances[{pos}]");
            if u.index != pos {
                push(ViolationKind::IndexGap, loc.clone(), format!("index {} where {pos} expected", u.index));
            }
            if u.text.trim().is_empty() {
                push(ViolationKind::EmptyText, loc.clone(), "empty utterance text".into());
            }
            if u.role == SpeakerRole::Unknown {
                push(ViolationKind::UnknownRole, loc.clone(), "speaker role is unknown".into());
            }
            if u.start_ms.is_some_and(|t| t < 0) {
                push(ViolationKind::NegativeTimestamp, loc.clone(), "start_ms is negative".into());
            }
            if let (Some(start), Some(end)) = (u.start_ms, u.end_ms) {
                if start > end {
                    push(ViolationKind::TimestampOrder, loc.clone(), format!("start_ms {start} > end_ms {end}"));
                }
            }
        }
        if dialogue.is_degenerate() {
            push(
                ViolationKind::DegenerateDialogue,
                base,
                "degenerate dialogue: needs at least one examiner and one patient utterance".into(),
            );
        }
    }
    out
}
