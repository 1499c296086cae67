//! Dialogue rendering and construction of the diagnosis and feature-extraction prompts.

use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureId, ScenarioDialogue, SpeakerRole};
use crate::digest::ContentHash;

/// Bumped whenever any fixed prompt string or layout changes.
pub const PROMPT_TEMPLATE_VERSION: &str = "sldx-prompts/1";

pub const DIAGNOSIS_QUESTION: &str = "Based on the above conversation between the examiner and the patient, please categorize if any observed SLDs for the patient. Answer only 'Yes' or 'No'.";

pub const FEATURE_QUESTION: &str = "Based on the above conversation and the feature definitions below, list every feature (F1–F10) observed in the patient's speech. Answer with feature codes only, or 'None'.";

pub const KNOWLEDGE_HEADER: &str = "Feature definitions:";

pub const KNOWLEDGE_ENTRY_TEMPLATE: &str = "{code} — {name}: {explanation}";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("utterance {0} has an unknown speaker role")]
    UnknownRolePresent(usize),
    #[error("knowledge entry for {0} is empty")]
    KnowledgeMissing(FeatureId),
    #[error("budget of {budget} chars is smaller than the first rendered line ({needed} chars)")]
    BudgetTooSmall { budget: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Diagnosis,
    FeatureExtraction,
}

impl PromptKind {
    pub fn tag(self) -> &'static str {
        match self {
            PromptKind::Diagnosis => "diagnosis",
            PromptKind::FeatureExtraction => "feature_extraction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    pub text: String,
    pub content_hash: ContentHash,
    pub truncated: bool,
}

impl RenderedPrompt {
    pub fn new(kind: PromptKind, text: String, truncated: bool) -> Self {
        let content_hash = prompt_hash(kind, &text);
        RenderedPrompt { kind, text, content_hash, truncated }
    }
}

pub fn prompt_hash(kind: PromptKind, text: &str) -> ContentHash {
    ContentHash::of_parts(&[kind.tag().as_bytes(), text.as_bytes()])
}

fn line_prefix(role: SpeakerRole) -> Option<&'static str> {
    match role {
        SpeakerRole::Examiner => Some("E: "),
        SpeakerRole::Patient => Some("P: "),
        SpeakerRole::Unknown => None,
    }
}

/// `E: ...` / `P: ...` lines joined by `\n`, without a trailing newline.
pub fn render_dialogue(d: &ScenarioDialogue) -> Result<String, PromptError> {
    let mut lines = Vec::with_capacity(d.utterances.len());
    for (pos, u) in d.utterances.iter().enumerate() {
        let prefix = line_prefix(u.role).ok_or(PromptError::UnknownRolePresent(pos))?;
        lines.push(format!("{prefix}{}", u.text));
    }
    Ok(lines.join("\n"))
}

pub fn build_diagnosis_prompt(d: &ScenarioDialogue) -> Result<RenderedPrompt, PromptError> {
    let dialogue = render_dialogue(d)?;
    let text = format!("{dialogue}\n\n{DIAGNOSIS_QUESTION}");
    Ok(RenderedPrompt::new(PromptKind::Diagnosis, text, false))
}

/// Definitions placed in the knowledge block, one per feature in F1..F10 order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    pub explanations: [String; 10],
}

impl Default for Knowledge {
    fn default() -> Self {
        Knowledge { explanations: FeatureId::ALL.map(|f| f.explanation().to_string()) }
    }
}

impl Knowledge {
    pub fn render(&self) -> Result<String, PromptError> {
        let mut block = String::from(KNOWLEDGE_HEADER);
        for f in FeatureId::ALL {
            let explanation = self.explanations[f.index()].trim();
            if explanation.is_empty() {
                return Err(PromptError::KnowledgeMissing(f));
            }
            block.push('\n');
            block.push_str(
                &KNOWLEDGE_ENTRY_TEMPLATE
                    .replace("{code}", f.code())
                    .replace("{name}", f.canonical_name())
                    .replace("{explanation}", explanation),
            );
        }
        Ok(block)
    }
}

pub fn build_feature_prompt(d: &ScenarioDialogue) -> Result<RenderedPrompt, PromptError> {
    build_feature_prompt_with(d, &Knowledge::default())
}

pub fn build_feature_prompt_with(d: &ScenarioDialogue, knowledge: &Knowledge) -> Result<RenderedPrompt, PromptError> {
    let dialogue = render_dialogue(d)?;
    let block = knowledge.render()?;
    let text = format!("{dialogue}\n\n{FEATURE_QUESTION}\n\n{block}");
    Ok(RenderedPrompt::new(PromptKind::FeatureExtraction, text, false))
}

/// Builds the prompt for `kind`, first trimming the dialogue to `max_chars` if given.
pub fn build_prompt(
    kind: PromptKind,
    d: &ScenarioDialogue,
    max_chars: Option<usize>,
) -> Result<RenderedPrompt, PromptError> {
    let (dialogue, truncated) = match max_chars {
        Some(max) => truncate_dialogue(d, max)?,
        None => (d.clone(), false),
    };
    let mut prompt = match kind {
        PromptKind::Diagnosis => build_diagnosis_prompt(&dialogue)?,
        PromptKind::FeatureExtraction => build_feature_prompt(&dialogue)?,
    };
    prompt.truncated = truncated;
    Ok(prompt)
}

/// Drops whole utterances from the tail until the rendered dialogue fits in `max_chars`.
pub fn truncate_dialogue(d: &ScenarioDialogue, max_chars: usize) -> Result<(ScenarioDialogue, bool), PromptError> {
    let mut line_lengths = Vec::with_capacity(d.utterances.len());
    for (pos, u) in d.utterances.iter().enumerate() {
        let prefix = line_prefix(u.role).ok_or(PromptError::UnknownRolePresent(pos))?;
        line_lengths.push(prefix.chars().count() + u.text.chars().count());
    }
    if let Some(&first) = line_lengths.first() {
        if first > max_chars {
            return Err(PromptError::BudgetTooSmall { budget: max_chars, needed: first });
        }
    }

    let mut keep = 0;
    let mut total = 0;
    for (i, len) in line_lengths.iter().enumerate() {
        let next = total + len + usize::from(i > 0);
        if next > max_chars {
            break;
        }
        total = next;
        keep = i + 1;
    }
    let truncated = keep < d.utterances.len();
    let out = ScenarioDialogue::new(d.scenario, d.utterances[..keep].to_vec());
    Ok((out, truncated))
}

#[derive(Debug, Serialize)]
pub struct KnowledgeEntry {
    pub code: &'static str,
    pub name: &'static str,
    pub explanation: &'static str,
}

/// Versioned listing of every fixed prompt string.
#[derive(Debug, Serialize)]
pub struct PromptCatalog {
    pub version: &'static str,
    pub diagnosis_question: &'static str,
    pub feature_question: &'static str,
    pub knowledge_header: &'static str,
    pub knowledge_entry_template: &'static str,
    pub knowledge: Vec<KnowledgeEntry>,
    pub dialogue_line_prefixes: [&'static str; 2],
}

pub fn prompt_catalog() -> PromptCatalog {
    PromptCatalog {
        version: PROMPT_TEMPLATE_VERSION,
        diagnosis_question: DIAGNOSIS_QUESTION,
        feature_question: FEATURE_QUESTION,
        knowledge_header: KNOWLEDGE_HEADER,
        knowledge_entry_template: KNOWLEDGE_ENTRY_TEMPLATE,
        knowledge: FeatureId::ALL
            .iter()
            .map(|f| KnowledgeEntry { code: f.code(), name: f.canonical_name(), explanation: f.explanation() })
            .collect(),
        dialogue_line_prefixes: ["E: ", "P: "],
    }
}

pub fn prompt_catalog_json() -> String {
    let mut text = serde_json::to_string_pretty(&prompt_catalog()).expect("catalog serializes");
    text.push('\n');
    text
}
