//! Parsing of model completions: yes/no verdicts and multi-label feature lists.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureId, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictValue {
    Affirmative,
    Negative,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: VerdictValue,
    /// Byte range of the deciding `yes`/`no` token in the source text.
    pub evidence_span: Option<Range<usize>>,
}

impl Verdict {
    pub fn indeterminate() -> Self {
        Verdict { value: VerdictValue::Indeterminate, evidence_span: None }
    }

    pub fn of(value: VerdictValue) -> Self {
        Verdict { value, evidence_span: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject answers that carry anything besides the bare token and punctuation.
    pub strict: bool,
}

/// Word tokens (alphanumeric runs) with their byte ranges.
fn word_tokens(text: &str) -> impl Iterator<Item = (Range<usize>, &str)> {
    let mut start = None;
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            out.push((s..i, &text[s..i]));
        }
    }
    if let Some(s) = start {
        out.push((s..text.len(), &text[s..]));
    }
    out.into_iter()
}

pub fn parse_verdict(text: &str) -> Verdict {
    parse_verdict_with(text, ParseOptions::default())
}

/// The first standalone `yes` or `no` (case-insensitive) decides the verdict.
pub fn parse_verdict_with(text: &str, options: ParseOptions) -> Verdict {
    let mut tokens = word_tokens(text);
    let decided = tokens.by_ref().find_map(|(span, word)| {
        if word.eq_ignore_ascii_case("yes") {
            Some((VerdictValue::Affirmative, span))
        } else if word.eq_ignore_ascii_case("no") {
            Some((VerdictValue::Negative, span))
        } else {
            None
        }
    });
    let Some((value, span)) = decided else {
        return Verdict::indeterminate();
    };
    if options.strict {
        let has_word_outside = |s: &str| s.chars().any(char::is_alphanumeric);
        if has_word_outside(&text[..span.start]) || has_word_outside(&text[span.end..]) {
            return Verdict::indeterminate();
        }
    }
    Verdict { value, evidence_span: Some(span) }
}

/// Byte ranges of sentences. A sentence ends at `.`, `!` or `?` followed by whitespace
/// or end of text; the whitespace between sentences belongs to no sentence.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(i);
        }
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = chars.peek().is_none_or(|(_, next)| next.is_whitespace());
            if at_boundary {
                let end = i + c.len_utf8();
                spans.push(start.take().unwrap()..end);
            }
        }
    }
    if let Some(s) = start {
        let tail = text[s..].trim_end();
        spans.push(s..s + tail.len());
    }
    spans
}

pub fn sentence_split(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|r| &text[r]).collect()
}

pub const NEGATION_CUES: [&str; 6] = ["no", "not", "none", "absent", "no evidence of", "does not"];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureParse {
    pub features: FeatureSet,
    pub warnings: Vec<String>,
}

struct Patterns {
    code: Regex,
    names: Vec<(FeatureId, Regex)>,
    negation: Regex,
    bare_none: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let names = FeatureId::ALL
            .iter()
            .map(|f| {
                let words: Vec<String> =
                    f.canonical_name().split_whitespace().map(|w| regex::escape(w).replace('é', "[eé]")).collect();
                let pattern = format!(r"(?i)\b{}\b", words.join(r"\s+"));
                (*f, Regex::new(&pattern).expect("feature name pattern"))
            })
            .collect();
        let cues: Vec<String> =
            NEGATION_CUES.iter().map(|c| c.split(' ').map(regex::escape).collect::<Vec<_>>().join(r"\s+")).collect();
        Patterns {
            code: Regex::new(r"(?i)\bF(\d+)\b").expect("code pattern"),
            names,
            negation: Regex::new(&format!(r"(?i)\b(?:{})\b", cues.join("|"))).expect("cue pattern"),
            bare_none: Regex::new(r"(?i)^\W*none\W*$").expect("none pattern"),
        }
    })
}

/// Recognizes feature codes and canonical names, dropping mentions preceded by a
/// negation cue in the same sentence.
pub fn parse_features(text: &str) -> FeatureParse {
    let p = patterns();
    let mut parse = FeatureParse::default();
    if p.bare_none.is_match(text) {
        return parse;
    }

    let mut negated = FeatureSet::empty();
    let mut unknown_codes: Vec<String> = Vec::new();

    for span in sentence_spans(text) {
        let sentence = &text[span];
        let first_cue = p.negation.find(sentence).map(|m| m.start());
        let is_negated = |pos: usize| first_cue.is_some_and(|cue| cue < pos);

        let mut mentions: Vec<(usize, FeatureId)> = Vec::new();
        for caps in p.code.captures_iter(sentence) {
            let whole = caps.get(0).unwrap();
            let number: Option<usize> = caps[1].parse().ok();
            match number.and_then(|n| n.checked_sub(1)).and_then(FeatureId::from_index) {
                Some(f) => mentions.push((whole.start(), f)),
                None => {
                    let code = whole.as_str().to_uppercase();
                    if !unknown_codes.contains(&code) {
                        unknown_codes.push(code);
                    }
                }
            }
        }
        for (f, re) in &p.names {
            for m in re.find_iter(sentence) {
                mentions.push((m.start(), *f));
            }
        }

        for (pos, f) in mentions {
            if is_negated(pos) {
                negated.insert(f);
            } else {
                parse.features.insert(f);
            }
        }
    }

    for code in unknown_codes {
        parse.warnings.push(format!("unknown feature code: {code}"));
    }
    for f in negated.iter().filter(|f| !parse.features.contains(*f)) {
        parse.warnings.push(format!("negated mention: {f}"));
    }
    parse
}
