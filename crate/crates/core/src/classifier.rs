//! Rule-based A4 classification and subject-level aggregation.
//!
//! A dialogue is labeled 1 when a critical feature (F1 or F9) is present, or when more
//! than two of the remaining eight features are present. A subject is positive when any
//! of its scenarios is.

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryLabel, FeatureId, FeatureSet, ScenarioId};
use crate::response_parser::{Verdict, VerdictValue};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClassifierError {
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("scenario {0} has no feature set")]
    MissingFeatures(ScenarioId),
}

const CRITICAL_MASK: u16 = (1 << FeatureId::F1 as u16) | (1 << FeatureId::F9 as u16);
const CUMULATIVE_THRESHOLD: u32 = 2;

pub fn classify_features(fs: FeatureSet) -> BinaryLabel {
    let critical = fs.mask() & CRITICAL_MASK != 0;
    let others = (fs.mask() & !CRITICAL_MASK).count_ones();
    BinaryLabel::from_bool(critical || others > CUMULATIVE_THRESHOLD)
}

/// Independent re-derivation of [`classify_features`] by explicit enumeration.
pub fn brute_force_oracle(fs: FeatureSet) -> BinaryLabel {
    let mut has_echo = false;
    let mut has_media_quote = false;
    let mut other_count = 0;
    for number in 1..=10u8 {
        let feature = match number {
            1 => FeatureId::F1,
            2 => FeatureId::F2,
            3 => FeatureId::F3,
            4 => FeatureId::F4,
            5 => FeatureId::F5,
            6 => FeatureId::F6,
            7 => FeatureId::F7,
            8 => FeatureId::F8,
            9 => FeatureId::F9,
            _ => FeatureId::F10,
        };
        if !fs.iter().any(|member| member == feature) {
            continue;
        }
        if number == 1 {
            has_echo = true;
        } else if number == 9 {
            has_media_quote = true;
        } else {
            other_count += 1;
        }
    }
    if has_echo || has_media_quote || other_count >= 3 {
        BinaryLabel::Positive
    } else {
        BinaryLabel::Negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictAggregate {
    pub label: BinaryLabel,
    /// Indeterminate verdicts, counted as negative.
    pub indeterminate_count: usize,
}

pub fn aggregate_verdicts(verdicts: &[Verdict]) -> Result<VerdictAggregate, ClassifierError> {
    aggregate_verdict_values(verdicts.iter().map(|v| v.value))
}

pub fn aggregate_verdict_values(
    values: impl IntoIterator<Item = VerdictValue>,
) -> Result<VerdictAggregate, ClassifierError> {
    let mut seen = false;
    let mut positive = false;
    let mut indeterminate_count = 0;
    for value in values {
        seen = true;
        match value {
            VerdictValue::Affirmative => positive = true,
            VerdictValue::Indeterminate => indeterminate_count += 1,
            VerdictValue::Negative => {}
        }
    }
    if !seen {
        return Err(ClassifierError::EmptyInput);
    }
    Ok(VerdictAggregate { label: BinaryLabel::from_bool(positive), indeterminate_count })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMode {
    /// Classify each scenario, then OR the labels.
    #[default]
    PerScenarioOr,
    /// Classify the union of all scenario feature sets.
    UnionThenClassify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: ScenarioId,
    pub verdict: Option<Verdict>,
    pub features: Option<FeatureSet>,
    label: Option<BinaryLabel>,
}

impl ScenarioOutcome {
    pub fn from_verdict(scenario: ScenarioId, verdict: Verdict) -> Self {
        let label = BinaryLabel::from_bool(verdict.value == VerdictValue::Affirmative);
        ScenarioOutcome { scenario, verdict: Some(verdict), features: None, label: Some(label) }
    }

    pub fn from_features(scenario: ScenarioId, features: FeatureSet) -> Self {
        ScenarioOutcome { scenario, verdict: None, features: Some(features), label: Some(classify_features(features)) }
    }

    /// An outcome whose completion failed or could not be produced.
    pub fn missing(scenario: ScenarioId) -> Self {
        ScenarioOutcome { scenario, verdict: None, features: None, label: None }
    }

    pub fn label(&self) -> Option<BinaryLabel> {
        self.label
    }
}

pub fn aggregate_feature_labels(
    outcomes: &[ScenarioOutcome],
    mode: AggregationMode,
) -> Result<BinaryLabel, ClassifierError> {
    if outcomes.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    let mut sets = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        sets.push(o.features.ok_or(ClassifierError::MissingFeatures(o.scenario))?);
    }
    Ok(match mode {
        AggregationMode::PerScenarioOr => {
            BinaryLabel::from_bool(sets.iter().any(|fs| classify_features(*fs).is_positive()))
        }
        AggregationMode::UnionThenClassify => {
            classify_features(sets.iter().fold(FeatureSet::empty(), |acc, fs| acc.union(*fs)))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectOutcome {
    pub subject_id: String,
    pub session_id: String,
    pub scenario_outcomes: Vec<ScenarioOutcome>,
    pub predicted_label: Option<BinaryLabel>,
    pub true_label: Option<BinaryLabel>,
}
