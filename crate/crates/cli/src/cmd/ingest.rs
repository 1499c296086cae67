use std::collections::BTreeSet;

use sldx_core::corpus::{parse_corpus, validate_session, write_corpus, LoadOptions, SessionTranscript};
use sldx_core::diarization::{
    assign_roles, import_role_labeled, merge_adjacent, read_boundaries, read_generic, read_role_labeled,
    segment_by_boundaries, DiarizationError, RoleMap,
};

use crate::args::{ImportArgs, IngestArgs, SegmentFormat};
use crate::error::{CliError, CliResult};

pub fn ingest(args: &IngestArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.corpus).map_err(|e| CliError::io(&args.corpus, e))?;
    let corpus = parse_corpus(&text, LoadOptions { strict: args.strict })?;
    for w in &corpus.warnings {
        println!("warning: {w}");
    }

    let mut violations = 0;
    let mut notices = 0;
    let mut labeled = 0;
    for session in &corpus.sessions {
        if session.a4_true.is_some() {
            labeled += 1;
        }
        for v in validate_session(session) {
            if v.kind.is_fatal() {
                violations += 1;
                println!("violation: {v}");
            } else {
                notices += 1;
                println!("notice: {v}");
            }
        }
    }
    let dialogues: usize = corpus.sessions.iter().map(|s| s.dialogues.len()).sum();
    println!(
        "{} sessions ({labeled} labeled), {dialogues} dialogues, {notices} notices, {violations} violations",
        corpus.sessions.len()
    );
    if violations > 0 {
        return Err(CliError::domain(format!("{violations} violations in {}", args.corpus.display())));
    }
    Ok(())
}

fn diarization_error(e: DiarizationError) -> CliError {
    match e {
        DiarizationError::SpeakerCountUnsupported(_) | DiarizationError::EmptyTranscript => {
            CliError::domain(e.to_string())
        }
        other => CliError::malformed(other.to_string()),
    }
}

pub fn import(args: &ImportArgs) -> CliResult {
    let bounds = read_boundaries(&args.boundaries).map_err(diarization_error)?;
    let (segments, roles) = match args.format {
        SegmentFormat::RoleLabeled => {
            let mut segments = read_role_labeled(&args.segments).map_err(diarization_error)?;
            import_role_labeled(&segments).map_err(diarization_error)?;
            for s in &mut segments {
                s.speaker_tag = s.speaker_tag.trim().to_ascii_lowercase();
            }
            (segments, RoleMap::explicit())
        }
        SegmentFormat::Generic => {
            let segments = read_generic(&args.segments).map_err(diarization_error)?;
            let roles = match (&args.examiner_tag, &args.patient_tag) {
                (Some(e), Some(p)) => RoleMap::manual(e, p),
                _ => assign_roles(&segments).map_err(diarization_error)?,
            };
            (segments, roles)
        }
    };
    for (tag, role) in &roles.roles {
        println!("speaker {tag:?} -> {role:?}");
    }

    let seg = segment_by_boundaries(&segments, &roles, &bounds).map_err(diarization_error)?;
    let mut dialogues = seg.dialogues;
    if args.merge_adjacent {
        for d in dialogues.values_mut() {
            d.utterances = merge_adjacent(&d.utterances);
            d.reindex();
        }
    }
    let session = SessionTranscript {
        subject_id: args.subject_id.clone(),
        session_id: args.session_id.clone(),
        a4_true: args.a4,
        dialogues,
    };
    if let Some(v) = validate_session(&session).into_iter().find(|v| v.kind.is_fatal()) {
        return Err(CliError::domain(format!("imported session is invalid: {v}")));
    }

    let mut sessions = Vec::new();
    if args.append && args.out.exists() {
        let text = std::fs::read_to_string(&args.out).map_err(|e| CliError::io(&args.out, e))?;
        sessions = parse_corpus(&text, LoadOptions::default())?.sessions;
        let ids: BTreeSet<&str> = sessions.iter().map(|s| s.session_id.as_str()).collect();
        if ids.contains(session.session_id.as_str()) {
            return Err(CliError::domain(format!(
                "session {:?} already exists in {}",
                session.session_id,
                args.out.display()
            )));
        }
    }
    println!(
        "imported {} scenarios; {} segments outside every window, {} unattributed",
        session.dialogues.len(),
        seg.dropped_count,
        seg.unknown_role_count
    );
    sessions.push(session);
    write_corpus(&args.out, &sessions)?;
    Ok(())
}
