use proptest::prelude::*;

use sldx_core::classifier::{aggregate_verdict_values, brute_force_oracle, classify_features};
use sldx_core::corpus::{
    parse_corpus, serialize_corpus, BinaryLabel, FeatureSet, LoadOptions, ScenarioDialogue, ScenarioId,
    SessionTranscript, SpeakerRole, Utterance,
};
use sldx_core::lexical_oracle::{detect_all, detect_echo, generate_synthetic, EchoParams, SynthSpec, DETECTABLE};
use sldx_core::response_parser::VerdictValue;

#[test]
fn every_subset_matches_oracle() {
    let mut counts = [0usize; 2];
    for mask in 0..1u16 << 10 {
        let fs = FeatureSet::from_mask(mask).unwrap();
        let label = classify_features(fs);
        assert_eq!(label, brute_force_oracle(fs));
        counts[label.value() as usize] += 1;
    }
    assert_eq!(counts, [37, 987]);
}

#[test]
fn every_eleven_scenario_verdict_vector() {
    for bits in 0u32..1 << 11 {
        let values =
            (0..11).map(|i| if bits >> i & 1 == 1 { VerdictValue::Affirmative } else { VerdictValue::Negative });
        let agg = aggregate_verdict_values(values).unwrap();
        assert_eq!(agg.label, BinaryLabel::from_bool(bits != 0));
        assert_eq!(agg.indeterminate_count, 0);
    }
}

fn dialogue(examiner: &str, patient: &str) -> ScenarioDialogue {
    ScenarioDialogue::new(
        ScenarioId::new(4).unwrap(),
        vec![Utterance::new(SpeakerRole::Examiner, examiner), Utterance::new(SpeakerRole::Patient, patient)],
    )
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-z]{1,7}", 1..12)
}

fn decorate(tokens: &[String], upper: &[bool], punct: &[usize]) -> String {
    const MARKS: [&str; 5] = [" ", ", ", "... ", "! ", " - "];
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let t = if upper[i % upper.len()] { t.to_uppercase() } else { t.clone() };
            format!("{t}{}", MARKS[punct[i % punct.len()] % MARKS.len()])
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn echo_ignores_case_and_punctuation(
        examiner in words(),
        patient in words(),
        upper in prop::collection::vec(any::<bool>(), 1..6),
        punct in prop::collection::vec(0usize..5, 1..6),
    ) {
        let plain = dialogue(&examiner.join(" "), &patient.join(" "));
        let noisy = dialogue(&decorate(&examiner, &upper, &punct), &decorate(&patient, &punct.iter().map(|p| p % 2 == 0).collect::<Vec<_>>(), &upper.iter().map(|u| *u as usize + 2).collect::<Vec<_>>()));
        for params in [EchoParams::default(), EchoParams { allow_pronoun_flip: false, ..EchoParams::default() }] {
            prop_assert_eq!(detect_echo(&plain, &params), detect_echo(&noisy, &params));
        }
    }

    #[test]
    fn copied_span_is_an_echo(examiner in prop::collection::vec("[a-z]{2,7}", 3..12), start in 0usize..9, len in 3usize..6) {
        let start = start.min(examiner.len() - 3);
        let end = (start + len).min(examiner.len());
        let patient = format!("Hmm, {}?", examiner[start..end].join(" "));
        prop_assert!(detect_echo(&dialogue(&examiner.join(" "), &patient), &EchoParams::default()));
    }

    #[test]
    fn synthetic_round_trip(seed in any::<u64>(), mask in 0u8..16, turns in 4usize..10) {
        let injected: FeatureSet = DETECTABLE
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, f)| *f)
            .collect();
        let (d, truth) = generate_synthetic(&SynthSpec { seed, injected, turns }).unwrap();
        prop_assert_eq!(detect_all(&d), truth);
    }
}

fn utterance() -> impl Strategy<Value = Utterance> {
    (any::<bool>(), "[A-Za-z ,.?'é]{1,30}", prop::option::of((0i64..10_000, 0i64..5_000))).prop_map(
        |(examiner, text, times)| {
            let role = if examiner { SpeakerRole::Examiner } else { SpeakerRole::Patient };
            let text = if text.trim().is_empty() { "x".to_string() } else { text };
            match times {
                Some((s, d)) => Utterance::new(role, text).with_times(s, s + d),
                None => Utterance::new(role, text),
            }
        },
    )
}

fn session() -> impl Strategy<Value = SessionTranscript> {
    (
        "[a-z0-9-]{1,10}",
        prop::option::of(0i64..=3),
        prop::collection::btree_map(0usize..11, prop::collection::vec(utterance(), 0..6), 0..4),
    )
        .prop_map(|(id, a4, scenarios)| SessionTranscript {
            subject_id: format!("subj-{id}"),
            session_id: id,
            a4_true: a4,
            dialogues: scenarios
                .into_iter()
                .map(|(i, u)| {
                    let s = ScenarioId::included().nth(i).unwrap();
                    (s, ScenarioDialogue::new(s, u))
                })
                .collect(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn corpus_round_trip(sessions in prop::collection::vec(session(), 1..4)) {
        let mut sessions = sessions;
        for (i, s) in sessions.iter_mut().enumerate() {
            s.session_id = format!("{}-{i}", s.session_id);
        }
        let text = serialize_corpus(&sessions).unwrap();
        let parsed = parse_corpus(&text, LoadOptions { strict: true }).unwrap();
        prop_assert_eq!(&parsed.sessions, &sessions);
        prop_assert_eq!(serialize_corpus(&parsed.sessions).unwrap(), text);
    }
}
