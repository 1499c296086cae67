//! Deterministic lexical detectors for the features that have a surface-level signature
//! (F1, F3, F6, F10), plus a seeded synthetic dialogue generator whose injections the
//! detectors recover exactly.
//!
//! These are test oracles for the pipeline, not clinical instruments.

mod synth;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use crate::corpus::{FeatureId, FeatureSet, ScenarioDialogue, SpeakerRole};

pub use synth::{
    generate_corpus, generate_synthetic, generate_synthetic_for, CorpusSynthSpec, SessionTruth, SynthError, SynthSpec,
    SyntheticCorpus, DETECTABLE,
};

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon {0:?} has no phrases")]
    Empty(String),
    #[error("failed to read lexicon {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Lowercases, deletes apostrophes, turns other punctuation into spaces and splits on
/// whitespace.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_alphanumeric() {
            cleaned.extend(c.to_lowercase());
        } else if c == '\'' || c == '’' {
            continue;
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoParams {
    pub min_span_tokens: usize,
    pub allow_pronoun_flip: bool,
    pub lookback_utterances: usize,
}

impl Default for EchoParams {
    fn default() -> Self {
        EchoParams { min_span_tokens: 3, allow_pronoun_flip: true, lookback_utterances: 1 }
    }
}

fn flip_pronoun(token: &str) -> &str {
    match token {
        "you" => "i",
        "i" => "you",
        "your" => "my",
        "my" => "your",
        "yours" => "mine",
        "mine" => "yours",
        "are" => "am",
        "am" => "are",
        other => other,
    }
}

/// Length of the longest run of equal consecutive tokens shared by `a` and `b`.
fn longest_common_run<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut best = 0;
    for x in a {
        let mut row = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            if x.as_ref() == y.as_ref() {
                row[j + 1] = prev[j] + 1;
                best = best.max(row[j + 1]);
            }
        }
        prev = row;
    }
    best
}

/// F1: a patient utterance repeats a contiguous span of a recent examiner utterance.
pub fn detect_echo(d: &ScenarioDialogue, p: &EchoParams) -> bool {
    for (i, u) in d.utterances.iter().enumerate() {
        if u.role != SpeakerRole::Patient {
            continue;
        }
        let patient = normalize_tokens(&u.text);
        if patient.len() < p.min_span_tokens {
            continue;
        }
        let recent =
            d.utterances[..i].iter().rev().filter(|e| e.role == SpeakerRole::Examiner).take(p.lookback_utterances);
        for e in recent {
            let examiner = normalize_tokens(&e.text);
            if longest_common_run(&examiner, &patient) >= p.min_span_tokens {
                return true;
            }
            if p.allow_pronoun_flip {
                let flipped: Vec<&str> = examiner.iter().map(|t| flip_pronoun(t)).collect();
                if longest_common_run(&flipped, &patient) >= p.min_span_tokens {
                    return true;
                }
            }
        }
    }
    false
}

/// A named set of normalized phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub name: String,
    pub phrases: BTreeSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: &str, phrases: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phrases: BTreeSet<String> =
            phrases.into_iter().map(|p| normalize_tokens(p.as_ref()).join(" ")).filter(|p| !p.is_empty()).collect();
        if phrases.is_empty() {
            return Err(LexiconError::Empty(name.to_string()));
        }
        Ok(Lexicon { name: name.to_string(), phrases })
    }

    /// One phrase per line; blank lines and `#` comments are skipped.
    pub fn parse(name: &str, text: &str) -> Result<Self, LexiconError> {
        Self::new(name, text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn load(name: &str, path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Self::parse(name, &text)
    }

    pub fn default_filler() -> Self {
        Self::parse("filler", include_str!("../../data/lexicons/filler.txt")).expect("bundled filler lexicon")
    }

    pub fn default_cliche() -> Self {
        Self::parse("cliche", include_str!("../../data/lexicons/cliche.txt")).expect("bundled cliche lexicon")
    }

    pub fn default_pronoun_templates() -> Self {
        Self::parse("pronoun_templates", include_str!("../../data/lexicons/pronoun_templates.txt"))
            .expect("bundled pronoun template lexicon")
    }

    fn tokenized(&self) -> Vec<Vec<&str>> {
        let mut out: Vec<Vec<&str>> = self.phrases.iter().map(|p| p.split(' ').collect()).collect();
        // longest first so the scan takes the longest match at each position
        out.sort_by_key(|p| std::cmp::Reverse(p.len()));
        out
    }

    /// Non-overlapping occurrences in `tokens`, scanning left to right and preferring the
    /// longest phrase at each position.
    pub fn count_matches<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        let phrases = self.tokenized();
        let mut count = 0;
        let mut i = 0;
        while i < tokens.len() {
            let hit = phrases
                .iter()
                .find(|p| p.len() <= tokens.len() - i && p.iter().zip(&tokens[i..]).all(|(a, b)| *a == b.as_ref()));
            match hit {
                Some(p) => {
                    count += 1;
                    i += p.len();
                }
                None => i += 1,
            }
        }
        count
    }
}

/// Total phrase occurrences across patient utterances, compared against `min_hits`.
pub fn detect_lexicon(d: &ScenarioDialogue, lex: &Lexicon, min_hits: usize) -> bool {
    let hits: usize = d.patient_utterances().map(|u| lex.count_matches(&normalize_tokens(&u.text))).sum();
    hits >= min_hits.max(1)
}

/// Verbs that commonly follow a third-person self-reference by name.
const SELF_REFERENCE_VERBS: [&str; 18] = [
    "is", "was", "has", "had", "wants", "wanted", "likes", "liked", "goes", "went", "does", "did", "doesnt", "didnt",
    "lives", "thinks", "feels", "needs",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounConfig {
    /// The subject's own name, enabling the `<name> <verb>` self-reference rule.
    pub subject_name: Option<String>,
    pub templates: Lexicon,
}

impl Default for PronounConfig {
    fn default() -> Self {
        PronounConfig { subject_name: None, templates: Lexicon::default_pronoun_templates() }
    }
}

/// F3 by fixed patterns; see `data/lexicons/pronoun_templates.txt`.
pub fn detect_pronoun_displacement(d: &ScenarioDialogue, config: &PronounConfig) -> bool {
    let name = config.subject_name.as_deref().map(normalize_tokens).filter(|t| !t.is_empty());
    d.patient_utterances().any(|u| {
        let tokens = normalize_tokens(&u.text);
        if config.templates.count_matches(&tokens) > 0 {
            return true;
        }
        match &name {
            Some(name) => tokens
                .windows(name.len() + 1)
                .any(|w| w[..name.len()] == name[..] && SELF_REFERENCE_VERBS.contains(&w[name.len()].as_str())),
            None => false,
        }
    })
}

/// Bundle of detector settings used by [`LexicalOracle::detect_all`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexicalOracle {
    pub echo: EchoParams,
    pub filler: Lexicon,
    pub filler_min_hits: usize,
    pub cliche: Lexicon,
    pub cliche_min_hits: usize,
    pub pronoun: PronounConfig,
}

impl Default for LexicalOracle {
    fn default() -> Self {
        LexicalOracle {
            echo: EchoParams::default(),
            filler: Lexicon::default_filler(),
            filler_min_hits: 2,
            cliche: Lexicon::default_cliche(),
            cliche_min_hits: 1,
            pronoun: PronounConfig::default(),
        }
    }
}

impl LexicalOracle {
    /// Only F1, F3, F6 and F10 can ever be reported.
    pub fn detect_all(&self, d: &ScenarioDialogue) -> FeatureSet {
        let mut found = FeatureSet::empty();
        if detect_echo(d, &self.echo) {
            found.insert(FeatureId::F1);
        }
        if detect_pronoun_displacement(d, &self.pronoun) {
            found.insert(FeatureId::F3);
        }
        if detect_lexicon(d, &self.filler, self.filler_min_hits) {
            found.insert(FeatureId::F6);
        }
        if detect_lexicon(d, &self.cliche, self.cliche_min_hits) {
            found.insert(FeatureId::F10);
        }
        found
    }
}

pub fn default_oracle() -> &'static LexicalOracle {
    static ORACLE: OnceLock<LexicalOracle> = OnceLock::new();
    ORACLE.get_or_init(LexicalOracle::default)
}

pub fn detect_all(d: &ScenarioDialogue) -> FeatureSet {
    default_oracle().detect_all(d)
}
