//! Import of vendor diarization output: role assignment and scenario segmentation.
//!
//! Three input shapes are supported, each a JSON array:
//!
//! - role-labeled segments: `{"speaker": "examiner"|"patient", "text", "start_ms", "end_ms"}`
//! - generic segments: `{"speaker_tag": "spk_0", "text", "start_ms", "end_ms"}`
//! - scenario boundaries: `{"scenario_id", "start_ms", "end_ms"}`
//!
//! All of them normalize to [`RawSegment`] / [`ScenarioBoundary`].

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ScenarioDialogue, ScenarioId, SpeakerRole, Utterance};

#[derive(Debug, thiserror::Error)]
pub enum DiarizationError {
    #[error("unrecognized speaker tag {0:?}; expected \"examiner\" or \"patient\"")]
    UnrecognizedTag(String),
    #[error("role assignment needs exactly 2 speakers, found {0}")]
    SpeakerCountUnsupported(usize),
    #[error("transcript has no segments")]
    EmptyTranscript,
    #[error("scenario boundaries overlap: {0} and {1}")]
    OverlappingBoundaries(ScenarioId, ScenarioId),
    #[error("invalid boundary for {0}: start_ms > end_ms")]
    InvertedBoundary(ScenarioId),
    #[error("invalid segment at position {position}: {message}")]
    InvalidSegment { position: usize, message: String },
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed import file {path}: {message}")]
    Malformed { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSegment {
    pub speaker_tag: String,
    pub text: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

impl RawSegment {
    pub fn new(speaker_tag: &str, text: &str, start_ms: i64, end_ms: i64) -> Self {
        RawSegment { speaker_tag: speaker_tag.to_string(), text: text.to_string(), start_ms, end_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioBoundary {
    pub scenario: ScenarioId,
    pub start_ms: i64,
    pub end_ms: i64,
}

impl ScenarioBoundary {
    fn contains(&self, t: i64) -> bool {
        self.start_ms <= t && t < self.end_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleMethod {
    Explicit,
    InterrogativeHeuristic,
    ManualOverride,
}

/// Speaker tag to role mapping. Tags not present map to [`SpeakerRole::Unknown`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoleMap {
    pub roles: BTreeMap<String, SpeakerRole>,
    pub method: RoleMethod,
}

impl RoleMap {
    pub fn manual(examiner_tag: &str, patient_tag: &str) -> Self {
        let mut roles = BTreeMap::new();
        roles.insert(examiner_tag.to_string(), SpeakerRole::Examiner);
        roles.insert(patient_tag.to_string(), SpeakerRole::Patient);
        RoleMap { roles, method: RoleMethod::ManualOverride }
    }

    pub fn role_of(&self, tag: &str) -> SpeakerRole {
        self.roles.get(tag).copied().unwrap_or(SpeakerRole::Unknown)
    }

    /// Direct mapping for role-labeled vendor output.
    pub fn explicit() -> Self {
        let mut roles = BTreeMap::new();
        roles.insert("examiner".to_string(), SpeakerRole::Examiner);
        roles.insert("patient".to_string(), SpeakerRole::Patient);
        RoleMap { roles, method: RoleMethod::Explicit }
    }
}

fn explicit_role(tag: &str) -> Option<SpeakerRole> {
    match tag.trim().to_ascii_lowercase().as_str() {
        "examiner" => Some(SpeakerRole::Examiner),
        "patient" => Some(SpeakerRole::Patient),
        _ => None,
    }
}

fn segment_utterance(role: SpeakerRole, seg: &RawSegment, index: usize) -> Utterance {
    Utterance { role, text: seg.text.clone(), start_ms: Some(seg.start_ms), end_ms: Some(seg.end_ms), index }
}

pub fn import_role_labeled(segments: &[RawSegment]) -> Result<Vec<Utterance>, DiarizationError> {
    segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            explicit_role(&seg.speaker_tag)
                .map(|role| segment_utterance(role, seg, i))
                .ok_or_else(|| DiarizationError::UnrecognizedTag(seg.speaker_tag.clone()))
        })
        .collect()
}

/// Picks the examiner as the speaker who asks proportionally more questions.
///
/// Ties go to the speaker of the first segment.
pub fn assign_roles(segments: &[RawSegment]) -> Result<RoleMap, DiarizationError> {
    let first = segments.first().ok_or(DiarizationError::EmptyTranscript)?;

    // (segments, segments containing '?') per tag, in first-appearance order
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for seg in segments {
        let entry = counts.entry(seg.speaker_tag.as_str()).or_insert_with(|| {
            order.push(seg.speaker_tag.as_str());
            (0, 0)
        });
        entry.0 += 1;
        if seg.text.contains('?') {
            entry.1 += 1;
        }
    }
    if order.len() != 2 {
        return Err(DiarizationError::SpeakerCountUnsupported(order.len()));
    }

    let (a, b) = (order[0], order[1]);
    let (a_total, a_q) = counts[a];
    let (b_total, b_q) = counts[b];
    // a_q/a_total vs b_q/b_total without floating point
    let lhs = a_q * b_total;
    let rhs = b_q * a_total;
    let examiner = if lhs > rhs {
        a
    } else if rhs > lhs {
        b
    } else {
        first.speaker_tag.as_str()
    };
    let patient = if examiner == a { b } else { a };

    let mut map = RoleMap::manual(examiner, patient);
    map.method = RoleMethod::InterrogativeHeuristic;
    Ok(map)
}

/// Result of cutting a transcript into scenario windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub dialogues: BTreeMap<ScenarioId, ScenarioDialogue>,
    /// Segments whose start fell outside every window.
    pub dropped_count: usize,
    /// Segments inside a window whose speaker could not be attributed.
    pub unknown_role_count: usize,
}

fn check_boundaries(bounds: &[ScenarioBoundary]) -> Result<Vec<ScenarioBoundary>, DiarizationError> {
    let mut sorted = bounds.to_vec();
    sorted.sort_by_key(|b| (b.start_ms, b.end_ms));
    for b in &sorted {
        if b.start_ms > b.end_ms {
            return Err(DiarizationError::InvertedBoundary(b.scenario));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start_ms < pair[0].end_ms || pair[0].scenario == pair[1].scenario {
            return Err(DiarizationError::OverlappingBoundaries(pair[0].scenario, pair[1].scenario));
        }
    }
    Ok(sorted)
}

/// Assigns each segment to the half-open window `[start, end)` containing its start.
///
/// Segments with an unmapped speaker tag are excluded and counted.
pub fn segment_by_boundaries(
    segments: &[RawSegment],
    roles: &RoleMap,
    bounds: &[ScenarioBoundary],
) -> Result<Segmentation, DiarizationError> {
    let bounds = check_boundaries(bounds)?;
    let mut per_scenario: BTreeMap<ScenarioId, Vec<Utterance>> = BTreeMap::new();
    let mut dropped_count = 0;
    let mut unknown_role_count = 0;

    for seg in segments {
        let Some(window) = bounds.iter().find(|b| b.contains(seg.start_ms)) else {
            dropped_count += 1;
            continue;
        };
        let role = roles.role_of(&seg.speaker_tag);
        if role == SpeakerRole::Unknown {
            unknown_role_count += 1;
            continue;
        }
        per_scenario.entry(window.scenario).or_default().push(segment_utterance(role, seg, 0));
    }

    let dialogues = per_scenario
        .into_iter()
        .map(|(scenario, utterances)| (scenario, ScenarioDialogue::new(scenario, utterances)))
        .collect();
    Ok(Segmentation { dialogues, dropped_count, unknown_role_count })
}

/// Joins runs of consecutive same-speaker utterances with a single space.
pub fn merge_adjacent(utterances: &[Utterance]) -> Vec<Utterance> {
    let mut merged: Vec<Utterance> = Vec::with_capacity(utterances.len());
    for u in utterances {
        match merged.last_mut() {
            Some(prev) if prev.role == u.role => {
                prev.text.push(' ');
                prev.text.push_str(&u.text);
                prev.start_ms = min_opt(prev.start_ms, u.start_ms);
                prev.end_ms = max_opt(prev.end_ms, u.end_ms);
            }
            _ => {
                let mut next = u.clone();
                next.index = merged.len();
                merged.push(next);
            }
        }
    }
    merged
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

fn max_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleLabeledRecord {
    speaker: String,
    text: String,
    start_ms: i64,
    end_ms: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenericRecord {
    speaker_tag: String,
    text: String,
    start_ms: i64,
    end_ms: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryRecord {
    scenario_id: i64,
    start_ms: i64,
    end_ms: i64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DiarizationError> {
    let display = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|source| DiarizationError::Io { path: display.clone(), source })?;
    serde_json::from_str(&text).map_err(|e| DiarizationError::Malformed { path: display, message: e.to_string() })
}

fn check_segments(segments: &[RawSegment]) -> Result<(), DiarizationError> {
    for (position, seg) in segments.iter().enumerate() {
        if seg.start_ms < 0 || seg.start_ms > seg.end_ms {
            return Err(DiarizationError::InvalidSegment {
                position,
                message: format!("bad time range [{}, {}]", seg.start_ms, seg.end_ms),
            });
        }
        if position > 0 && segments[position - 1].start_ms > seg.start_ms {
            return Err(DiarizationError::InvalidSegment {
                position,
                message: "segments are not sorted by start_ms".into(),
            });
        }
    }
    Ok(())
}

/// Reads vendor output that already carries examiner/patient labels.
pub fn read_role_labeled(path: &Path) -> Result<Vec<RawSegment>, DiarizationError> {
    let records: Vec<RoleLabeledRecord> = read_json(path)?;
    let segments: Vec<RawSegment> = records
        .into_iter()
        .map(|r| RawSegment { speaker_tag: r.speaker, text: r.text, start_ms: r.start_ms, end_ms: r.end_ms })
        .collect();
    check_segments(&segments)?;
    Ok(segments)
}

/// Reads generic two-speaker output (`spk_0`, `Speaker 1`, ...).
pub fn read_generic(path: &Path) -> Result<Vec<RawSegment>, DiarizationError> {
    let records: Vec<GenericRecord> = read_json(path)?;
    let segments: Vec<RawSegment> = records
        .into_iter()
        .map(|r| RawSegment { speaker_tag: r.speaker_tag, text: r.text, start_ms: r.start_ms, end_ms: r.end_ms })
        .collect();
    check_segments(&segments)?;
    Ok(segments)
}

pub fn read_boundaries(path: &Path) -> Result<Vec<ScenarioBoundary>, DiarizationError> {
    let records: Vec<BoundaryRecord> = read_json(path)?;
    records
        .into_iter()
        .map(|r| {
            let scenario = ScenarioId::new(r.scenario_id).map_err(|e| DiarizationError::Malformed {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(ScenarioBoundary { scenario, start_ms: r.start_ms, end_ms: r.end_ms })
        })
        .collect()
}
