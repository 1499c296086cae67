//! On-disk transcript corpus format (JSON).
//!
//! ```text
//! {"corpus_version": "1",
//!  "sessions": [{"subject_id": str, "session_id": str, "a4_score": int|null,
//!                "scenarios": [{"scenario_id": int,
//!                               "utterances": [{"speaker": "examiner"|"patient",
//!                                               "text": str,
//!                                               "start_ms": int|null,
//!                                               "end_ms": int|null}]}]}]}
//! ```
//!
//! Unknown fields are rejected in strict mode and reported as warnings otherwise.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{validate_session, CorpusError, ScenarioDialogue, ScenarioId, SessionTranscript, SpeakerRole, Utterance};

pub const CORPUS_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub sessions: Vec<SessionTranscript>,
    /// Unknown-field notices collected in lenient mode.
    pub warnings: Vec<String>,
}

/// Reads a corpus file and rejects any session with a fatal invariant violation.
pub fn load_corpus(path: &Path, options: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let corpus = parse_corpus(&text, options)?;
    for session in &corpus.sessions {
        if let Some(v) = validate_session(session).into_iter().find(|v| v.kind.is_fatal()) {
            return Err(CorpusError::SchemaViolation {
                session_id: Some(v.session_id),
                path: v.location,
                message: v.message,
            });
        }
    }
    Ok(corpus)
}

/// Schema-level parse only; invariant checks are left to [`validate_session`].
pub fn parse_corpus(text: &str, options: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let root: Value = serde_json::from_str(text).map_err(|e| CorpusError::MalformedFile(e.to_string()))?;
    let mut reader = Reader { strict: options.strict, warnings: Vec::new(), session_id: None };
    let sessions = reader.corpus(&root)?;
    Ok(LoadedCorpus { sessions, warnings: reader.warnings })
}

struct Reader {
    strict: bool,
    warnings: Vec<String>,
    session_id: Option<String>,
}

impl Reader {
    fn violation(&self, path: &str, message: impl Into<String>) -> CorpusError {
        CorpusError::SchemaViolation {
            session_id: self.session_id.clone(),
            path: path.to_string(),
            message: message.into(),
        }
    }

    fn object<'v>(&self, value: &'v Value, path: &str) -> Result<&'v Map<String, Value>, CorpusError> {
        value.as_object().ok_or_else(|| self.violation(path, "expected an object"))
    }

    fn check_fields(&mut self, obj: &Map<String, Value>, known: &[&str], path: &str) -> Result<(), CorpusError> {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                if self.strict {
                    return Err(self.violation(path, format!("unknown field {key:?}")));
                }
                self.warnings.push(format!("{path}: ignoring unknown field {key:?}"));
            }
        }
        Ok(())
    }

    fn required<'v>(&self, obj: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v Value, CorpusError> {
        obj.get(key).ok_or_else(|| self.violation(path, format!("missing field {key:?}")))
    }

    fn string(&self, obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, CorpusError> {
        self.required(obj, key, path)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.violation(&format!("{path}.{key}"), "expected a string"))
    }

    fn opt_int(&self, obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<i64>, CorpusError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_i64()
                .map(Some)
                .ok_or_else(|| self.violation(&format!("{path}.{key}"), "expected an integer or null")),
        }
    }

    fn array<'v>(&self, obj: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v Vec<Value>, CorpusError> {
        self.required(obj, key, path)?
            .as_array()
            .ok_or_else(|| self.violation(&format!("{path}.{key}"), "expected an array"))
    }

    fn corpus(&mut self, root: &Value) -> Result<Vec<SessionTranscript>, CorpusError> {
        let obj = self.object(root, "$")?;
        self.check_fields(obj, &["corpus_version", "sessions"], "$")?;
        let version = self.string(obj, "corpus_version", "$")?;
        if version != CORPUS_VERSION {
            return Err(self.violation("$.corpus_version", format!("unsupported corpus_version {version:?}")));
        }
        let mut seen = HashSet::new();
        let mut sessions = Vec::new();
        for (i, raw) in self.array(obj, "sessions", "$")?.iter().enumerate() {
            let session = self.session(raw, &format!("$.sessions[{i}]"))?;
            if !seen.insert(session.session_id.clone()) {
                return Err(CorpusError::DuplicateSessionId(session.session_id));
            }
            sessions.push(session);
        }
        Ok(sessions)
    }

    fn session(&mut self, raw: &Value, path: &str) -> Result<SessionTranscript, CorpusError> {
        self.session_id = None;
        let obj = self.object(raw, path)?;
        let session_id = self.string(obj, "session_id", path)?;
        self.session_id = Some(session_id.clone());
        self.check_fields(obj, &["subject_id", "session_id", "a4_score", "scenarios"], path)?;
        let subject_id = self.string(obj, "subject_id", path)?;
        let a4_true = self.opt_int(obj, "a4_score", path)?;

        let mut dialogues = BTreeMap::new();
        for (i, raw) in self.array(obj, "scenarios", path)?.iter().enumerate() {
            let spath = format!("{path}.scenarios[{i}]");
            let dialogue = self.scenario(raw, &spath)?;
            if dialogues.insert(dialogue.scenario, dialogue).is_some() {
                return Err(self.violation(&spath, "scenario appears twice in one session"));
            }
        }
        Ok(SessionTranscript { subject_id, session_id, a4_true, dialogues })
    }

    fn scenario(&mut self, raw: &Value, path: &str) -> Result<ScenarioDialogue, CorpusError> {
        let obj = self.object(raw, path)?;
        self.check_fields(obj, &["scenario_id", "utterances"], path)?;
        let id = self
            .required(obj, "scenario_id", path)?
            .as_i64()
            .ok_or_else(|| self.violation(&format!("{path}.scenario_id"), "expected an integer"))?;
        let scenario = ScenarioId::new(id)
            .map_err(|_| self.violation(&format!("{path}.scenario_id"), format!("scenario_id {id} not in 1..=15")))?;
        let mut utterances = Vec::new();
        for (i, raw) in self.array(obj, "utterances", path)?.iter().enumerate() {
            utterances.push(self.utterance(raw, &format!("{path}.utterances[{i}]"))?);
        }
        Ok(ScenarioDialogue::new(scenario, utterances))
    }

    fn utterance(&mut self, raw: &Value, path: &str) -> Result<Utterance, CorpusError> {
        let obj = self.object(raw, path)?;
        self.check_fields(obj, &["speaker", "text", "start_ms", "end_ms"], path)?;
        let role = match self.string(obj, "speaker", path)?.as_str() {
            "examiner" => SpeakerRole::Examiner,
            "patient" => SpeakerRole::Patient,
            other => {
                return Err(self.violation(
                    &format!("{path}.speaker"),
                    format!("speaker must be \"examiner\" or \"patient\", got {other:?}"),
                ))
            }
        };
        Ok(Utterance {
            role,
            text: self.string(obj, "text", path)?,
            start_ms: self.opt_int(obj, "start_ms", path)?,
            end_ms: self.opt_int(obj, "end_ms", path)?,
            index: 0,
        })
    }
}

#[derive(Serialize)]
struct CorpusOut<'a> {
    corpus_version: &'static str,
    sessions: Vec<SessionOut<'a>>,
}

#[derive(Serialize)]
struct SessionOut<'a> {
    subject_id: &'a str,
    session_id: &'a str,
    a4_score: Option<i64>,
    scenarios: Vec<ScenarioOut<'a>>,
}

#[derive(Serialize)]
struct ScenarioOut<'a> {
    scenario_id: u8,
    utterances: Vec<UtteranceOut<'a>>,
}

#[derive(Serialize)]
struct UtteranceOut<'a> {
    speaker: &'static str,
    text: &'a str,
    start_ms: Option<i64>,
    end_ms: Option<i64>,
}

/// Pretty-printed canonical form, newline-terminated. Byte-stable for equal input.
pub fn serialize_corpus(sessions: &[SessionTranscript]) -> Result<String, CorpusError> {
    let mut out = CorpusOut { corpus_version: CORPUS_VERSION, sessions: Vec::with_capacity(sessions.len()) };
    for s in sessions {
        let mut scenarios = Vec::new();
        for d in s.dialogues.values() {
            let mut utterances = Vec::new();
            for u in &d.utterances {
                let speaker = match u.role {
                    SpeakerRole::Examiner => "examiner",
                    SpeakerRole::Patient => "patient",
                    SpeakerRole::Unknown => {
                        return Err(CorpusError::SchemaViolation {
                            session_id: Some(s.session_id.clone()),
                            path: format!("scenarios[{}].utterances[{}]", d.scenario, u.index),
                            message: "unknown speaker role cannot be serialized".into(),
                        })
                    }
                };
                utterances.push(UtteranceOut { speaker, text: &u.text, start_ms: u.start_ms, end_ms: u.end_ms });
            }
            scenarios.push(ScenarioOut { scenario_id: d.scenario.id(), utterances });
        }
        out.sessions.push(SessionOut {
            subject_id: &s.subject_id,
            session_id: &s.session_id,
            a4_score: s.a4_true,
            scenarios,
        });
    }
    let mut text = serde_json::to_string_pretty(&out).expect("corpus serialization is infallible");
    text.push('\n');
    Ok(text)
}

pub fn write_corpus(path: &Path, sessions: &[SessionTranscript]) -> Result<(), CorpusError> {
    std::fs::write(path, serialize_corpus(sessions)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
      "corpus_version": "1",
      "sessions": [{
        "subject_id": "subj-1", "session_id": "S-001-a", "a4_score": 1,
        "scenarios": [{"scenario_id": 3, "utterances": [
          {"speaker": "examiner", "text": "What do you see here?", "start_ms": 0, "end_ms": 1200},
          {"speaker": "patient", "text": "A kitchen.", "start_ms": 1300, "end_ms": 2000},
          {"speaker": "examiner", "text": "Anything else?", "start_ms": null, "end_ms": null},
          {"speaker": "patient", "text": "A dog by the door."}
        ]}]
      }]
    }"#;

    #[test]
    fn minimal_file_loads() {
        let c = parse_corpus(MINIMAL, LoadOptions::default()).unwrap();
        assert_eq!(c.sessions.len(), 1);
        let s = &c.sessions[0];
        assert_eq!(s.dialogues.len(), 1);
        let d = &s.dialogues[&ScenarioId::new(3).unwrap()];
        assert_eq!(d.utterances.len(), 4);
        assert_eq!(d.utterances[3].index, 3);
        assert_eq!(d.utterances[0].end_ms, Some(1200));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn duplicate_session_id() {
        let text = r#"{"corpus_version":"1","sessions":[
          {"subject_id":"a","session_id":"S-001-a","a4_score":null,"scenarios":[]},
          {"subject_id":"b","session_id":"S-001-a","a4_score":null,"scenarios":[]}]}"#;
        assert!(matches!(
            parse_corpus(text, LoadOptions::default()),
            Err(CorpusError::DuplicateSessionId(id)) if id == "S-001-a"
        ));
    }

    #[test]
    fn syntax_error_is_malformed() {
        assert!(matches!(
            parse_corpus("{\"corpus_version\": ", LoadOptions::default()),
            Err(CorpusError::MalformedFile(_))
        ));
    }

    #[test]
    fn field_errors_name_session_and_path() {
        let text = r#"{"corpus_version":"1","sessions":[
          {"subject_id":"a","session_id":"S-9","a4_score":"two","scenarios":[]}]}"#;
        match parse_corpus(text, LoadOptions::default()) {
            Err(CorpusError::SchemaViolation { session_id, path, .. }) => {
                assert_eq!(session_id.as_deref(), Some("S-9"));
                assert_eq!(path, "$.sessions[0].a4_score");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"corpus_version":"1","sessions":[
          {"subject_id":"a","session_id":"S-9","a4_score":0,"scenarios":[
            {"scenario_id":3,"utterances":[{"speaker":"narrator","text":"x"}]}]}]}"#;
        match parse_corpus(text, LoadOptions::default()) {
            Err(CorpusError::SchemaViolation { path, .. }) => {
                assert_eq!(path, "$.sessions[0].scenarios[0].utterances[0].speaker")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_strict_vs_lenient() {
        let text = r#"{"corpus_version":"1","vendor":"x","sessions":[
          {"subject_id":"a","session_id":"S-1","a4_score":0,"site":"LA","scenarios":[]}]}"#;
        let lenient = parse_corpus(text, LoadOptions { strict: false }).unwrap();
        assert_eq!(lenient.warnings.len(), 2);
        assert!(lenient.warnings[1].contains("\"site\""));
        assert!(matches!(parse_corpus(text, LoadOptions { strict: true }), Err(CorpusError::SchemaViolation { .. })));
    }

    #[test]
    fn out_of_range_scenario_rejected() {
        let text = r#"{"corpus_version":"1","sessions":[
          {"subject_id":"a","session_id":"S-1","a4_score":0,"scenarios":[
            {"scenario_id":16,"utterances":[]}]}]}"#;
        assert!(matches!(parse_corpus(text, LoadOptions::default()), Err(CorpusError::SchemaViolation { .. })));
    }

    #[test]
    fn load_rejects_fatal_but_keeps_degenerate() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(
            &bad,
            r#"{"corpus_version":"1","sessions":[{"subject_id":"a","session_id":"S-1","a4_score":5,"scenarios":[]}]}"#,
        )
        .unwrap();
        assert!(matches!(load_corpus(&bad, LoadOptions::default()), Err(CorpusError::SchemaViolation { .. })));
        let degenerate = dir.path().join("deg.json");
        std::fs::write(
            &degenerate,
            r#"{"corpus_version":"1","sessions":[{"subject_id":"a","session_id":"S-1","a4_score":0,"scenarios":[
              {"scenario_id":3,"utterances":[{"speaker":"examiner","text":"Hello?"}]}]}]}"#,
        )
        .unwrap();
        assert_eq!(load_corpus(&degenerate, LoadOptions::default()).unwrap().sessions.len(), 1);
    }

    #[test]
    fn serialize_reparses_equal() {
        let c = parse_corpus(MINIMAL, LoadOptions::default()).unwrap();
        let text = serialize_corpus(&c.sessions).unwrap();
        let again = parse_corpus(&text, LoadOptions { strict: true }).unwrap();
        assert_eq!(again.sessions, c.sessions);
        assert_eq!(serialize_corpus(&again.sessions).unwrap(), text);
    }
}
