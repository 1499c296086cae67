//! The ten language-deficit feature categories and a compact set type over them.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// One of the ten unconventional-language feature categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum FeatureId {
    F1 = 0,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
}

impl FeatureId {
    pub const ALL: [FeatureId; 10] = [
        FeatureId::F1,
        FeatureId::F2,
        FeatureId::F3,
        FeatureId::F4,
        FeatureId::F5,
        FeatureId::F6,
        FeatureId::F7,
        FeatureId::F8,
        FeatureId::F9,
        FeatureId::F10,
    ];

    /// Zero-based position (F1 = 0).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FeatureId> {
        Self::ALL.get(index).copied()
    }

    /// One-based number (F1 = 1).
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn code(self) -> &'static str {
        match self {
            FeatureId::F1 => "F1",
            FeatureId::F2 => "F2",
            FeatureId::F3 => "F3",
            FeatureId::F4 => "F4",
            FeatureId::F5 => "F5",
            FeatureId::F6 => "F6",
            FeatureId::F7 => "F7",
            FeatureId::F8 => "F8",
            FeatureId::F9 => "F9",
            FeatureId::F10 => "F10",
        }
    }

    pub fn canonical_name(self) -> &'static str {
        match self {
            FeatureId::F1 => "Echoic Repetition",
            FeatureId::F2 => "Unconventional Content",
            FeatureId::F3 => "Pronoun Displacement",
            FeatureId::F4 => "Incongruous Humor Timing",
            FeatureId::F5 => "Formalistic Language Use",
            FeatureId::F6 => "Superfluous Phrase Attachment",
            FeatureId::F7 => "Excessive Social Phrasing",
            FeatureId::F8 => "Monotone Social Expression",
            FeatureId::F9 => "Stereotyped Media Quoting",
            FeatureId::F10 => "Clichéd Verbal Substitutions",
        }
    }

    /// Examiner-authored definition used as the knowledge block of feature prompts.
    pub fn explanation(self) -> &'static str {
        match self {
            FeatureId::F1 => "The individual mimics verbatim what has been said by others, including the examiner, or recites phrases from external sources like advertisements or movie scripts, showing a delayed echo response.",
            FeatureId::F2 => "The speech contains peculiarly chosen content or contextually odd phrasing, such as using 'unfreshness through household' for lack of novelty, 'mideast' instead of 'midwest' for U.S. states, or describing entry into a building as 'through various apertures'.",
            FeatureId::F3 => "Incorrectly substitutes personal pronouns, using 'you' in place of 'I', or refers to themselves in the third person, either by pronouns like 'he/she' or by their own name.",
            FeatureId::F4 => "Incorporates humorous or comedic expressions inappropriately during discussions meant to be serious, showing a misalignment between the content's emotional tone and the context.",
            FeatureId::F5 => "Employs an overly formal or archaic language style that seems lifted from written texts, legal documents, or old literature, rather than engaging in conversational speech. Examples include elaborate ways of expressing simple ideas or feelings.",
            FeatureId::F6 => "Attaches redundant phrases or filler expressions to their speech without contributing any substantive meaning or context, such as 'you know what I mean' or 'as they say,' indicating a habit rather than intentional emphasis.",
            FeatureId::F7 => "Utilizes conventional social expressions excessively or inappropriately, responding with phrases like 'oh, thank you' in contexts where it does not fit or preempting social gestures not yet performed by the interlocutor.",
            FeatureId::F8 => "Reiterates social phrases with an unchanged, monotonous intonation, indicating a lack of genuine emotional engagement or variability in social interactions.",
            FeatureId::F9 => "Quotes lines from commercials, movies, or TV shows in a highly stereotypical manner, employing a canned intonation that mimics the original source closely, suggesting a reliance on external media for verbal expressions.",
            FeatureId::F10 => "Resorts to well-known sayings or clichés in lieu of engaging in direct conversational responses, using phrases like 'circle of life' or 'ready to roll' as stand-ins for more personalized communication.",
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for FeatureId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        canonical_feature(&token).map_err(serde::de::Error::custom)
    }
}

fn normalize_token(token: &str) -> String {
    token.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Resolves a feature code (`f1`..`f10`) or canonical name, case-insensitively.
pub fn canonical_feature(token: &str) -> Result<FeatureId, CorpusError> {
    let normalized = normalize_token(token);
    FeatureId::ALL
        .into_iter()
        .find(|f| normalized == f.code().to_lowercase() || normalized == f.canonical_name().to_lowercase())
        .ok_or_else(|| CorpusError::UnknownFeature(token.to_string()))
}

/// A subset of the ten features, stored as a 10-bit mask.
///
/// Iteration always yields members in ascending F1..F10 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FeatureSet(u16);

impl FeatureSet {
    pub const FULL_MASK: u16 = (1 << 10) - 1;

    pub const fn empty() -> Self {
        FeatureSet(0)
    }

    pub fn from_mask(mask: u16) -> Option<Self> {
        (mask & !Self::FULL_MASK == 0).then_some(FeatureSet(mask))
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, feature: FeatureId) -> bool {
        let bit = 1 << feature.index();
        let fresh = self.0 & bit == 0;
        self.0 |= bit;
        fresh
    }

    pub fn remove(&mut self, feature: FeatureId) -> bool {
        let bit = 1 << feature.index();
        let present = self.0 & bit != 0;
        self.0 &= !bit;
        present
    }

    pub fn contains(self, feature: FeatureId) -> bool {
        self.0 & (1 << feature.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 | other.0)
    }

    pub fn intersection(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: FeatureSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = FeatureId> {
        FeatureId::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    /// Codes joined with `;`, e.g. `F1;F9`. Empty sets render as the empty string.
    pub fn to_codes(self, separator: &str) -> String {
        self.iter().map(FeatureId::code).collect::<Vec<_>>().join(separator)
    }
}

impl FromIterator<FeatureId> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = FeatureId>>(iter: I) -> Self {
        let mut set = FeatureSet::empty();
        for f in iter {
            set.insert(f);
        }
        set
    }
}

impl<const N: usize> From<[FeatureId; N]> for FeatureSet {
    fn from(features: [FeatureId; N]) -> Self {
        features.into_iter().collect()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_codes(", "))
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let members = Vec::<FeatureId>::deserialize(deserializer)?;
        Ok(members.into_iter().collect())
    }
}
