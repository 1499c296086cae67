//! Seeded synthetic examiner/patient dialogues with known injected features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::classify_features;
use crate::corpus::{FeatureId, FeatureSet, ScenarioDialogue, ScenarioId, SessionTranscript, SpeakerRole, Utterance};

/// Features the lexical detectors can recover.
pub const DETECTABLE: [FeatureId; 4] = [FeatureId::F1, FeatureId::F3, FeatureId::F6, FeatureId::F10];

pub const MIN_TURNS: usize = 4;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("{0} has no lexical detector and cannot be injected")]
    UndetectableFeatureRequested(FeatureId),
    #[error("at least {MIN_TURNS} turns are required, got {0}")]
    TooFewTurns(usize),
    #[error("at least one session and one scenario per session are required")]
    EmptyCorpus,
}

/// Examiner questions paired with the patient's echoed form of each.
pub(super) const QUESTIONS: [(&str, &str); 12] = [
    ("Do you have any pets at home?", "Do I have any pets at home?"),
    ("Where do you usually buy groceries?", "Where do I usually buy groceries?"),
    ("How do you get to work each day?", "How do I get to work each day?"),
    ("Are you good at cooking?", "Am I good at cooking?"),
    ("Do you like rainy weather?", "Do I like rainy weather?"),
    ("Is your apartment close to the park?", "Is my apartment close to the park?"),
    ("Have you seen the new library downtown?", "Have I seen the new library downtown?"),
    ("Did you enjoy the picture on this card?", "Did I enjoy the picture on this card?"),
    ("Do you keep a calendar for appointments?", "Do I keep a calendar for appointments?"),
    ("Which season do you prefer?", "Which season do I prefer?"),
    ("Do you call your family often?", "Do I call my family often?"),
    ("Was the train crowded this morning?", "Was the train crowded this morning?"),
];

pub(super) const NEUTRAL_ANSWERS: [&str; 12] = [
    "Mostly on Saturdays after lunch.",
    "Probably the small shop on the corner.",
    "It depends on the season.",
    "Only sometimes, not every week.",
    "Two cats and a goldfish.",
    "The bus takes about twenty minutes.",
    "Sometimes, when there is time.",
    "Yes, a few times last month.",
    "My sister usually helps with that.",
    "Usually early, before breakfast.",
    "It was quiet and pleasant.",
    "Autumn, because of the colors.",
];

pub(super) const DISPLACEMENT_SENTENCES: [&str; 3] = [
    "They kind of live near her farther from here.",
    "We live near him, by the river.",
    "Me want a quieter place someday.",
];

pub(super) const FILLERS: [&str; 5] =
    ["you know what I mean", "as they say", "so to speak", "if you will", "needless to say"];

pub(super) const CLICHES: [&str; 6] = [
    "Circle of life",
    "Ready to roll",
    "Well, pretty much",
    "At the end of the day",
    "Time will tell",
    "It is what it is",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub seed: u64,
    pub injected: FeatureSet,
    /// Examiner question / patient answer pairs.
    pub turns: usize,
}

fn check_spec(spec: &SynthSpec) -> Result<(), SynthError> {
    if let Some(f) = spec.injected.iter().find(|f| !DETECTABLE.contains(f)) {
        return Err(SynthError::UndetectableFeatureRequested(f));
    }
    if spec.turns < MIN_TURNS {
        return Err(SynthError::TooFewTurns(spec.turns));
    }
    Ok(())
}

/// Generates one dialogue in a seed-chosen included scenario.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(ScenarioDialogue, FeatureSet), SynthError> {
    let included: Vec<ScenarioId> = ScenarioId::included().collect();
    let scenario = included[(spec.seed % included.len() as u64) as usize];
    generate_synthetic_for(spec, scenario)
}

pub fn generate_synthetic_for(
    spec: &SynthSpec,
    scenario: ScenarioId,
) -> Result<(ScenarioDialogue, FeatureSet), SynthError> {
    check_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((build_dialogue(&mut rng, scenario, spec.injected, spec.turns), spec.injected))
}

fn capitalize_rest(answer: &str) -> String {
    let mut chars = answer.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn build_dialogue(rng: &mut ChaCha8Rng, scenario: ScenarioId, injected: FeatureSet, turns: usize) -> ScenarioDialogue {
    // question order: a shuffled pass over the bank, repeated as needed
    let mut question_order: Vec<usize> = Vec::with_capacity(turns);
    while question_order.len() < turns {
        let mut pass: Vec<usize> = (0..QUESTIONS.len()).collect();
        pass.shuffle(rng);
        question_order.extend(pass);
    }
    question_order.truncate(turns);

    // one distinct turn per injected feature
    let mut slots: Vec<usize> = (0..turns).collect();
    slots.shuffle(rng);
    let mut injection_at: BTreeMap<usize, FeatureId> = BTreeMap::new();
    for (slot, feature) in slots.into_iter().zip(injected.iter()) {
        injection_at.insert(slot, feature);
    }

    let mut utterances = Vec::with_capacity(turns * 2);
    for (turn, &q) in question_order.iter().enumerate() {
        let (question, echoed) = QUESTIONS[q];
        let neutral = NEUTRAL_ANSWERS[rng.gen_range(0..NEUTRAL_ANSWERS.len())];
        let answer = match injection_at.get(&turn) {
            None => neutral.to_string(),
            Some(FeatureId::F1) => format!("Uh, {} {neutral}", capitalize_rest(echoed)),
            Some(FeatureId::F3) => DISPLACEMENT_SENTENCES[rng.gen_range(0..DISPLACEMENT_SENTENCES.len())].to_string(),
            Some(FeatureId::F6) => {
                let picks: Vec<&&str> = FILLERS.choose_multiple(rng, 2).collect();
                let body = neutral.trim_end_matches('.');
                format!("{body}, {}, {}.", picks[0], picks[1])
            }
            Some(FeatureId::F10) => {
                let cliche = CLICHES[rng.gen_range(0..CLICHES.len())];
                format!("{cliche}. {neutral}")
            }
            Some(other) => unreachable!("{other} rejected by check_spec"),
        };
        utterances.push(Utterance::new(SpeakerRole::Examiner, question));
        utterances.push(Utterance::new(SpeakerRole::Patient, answer));
    }
    ScenarioDialogue::new(scenario, utterances)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSynthSpec {
    pub seed: u64,
    pub features: FeatureSet,
    pub turns: usize,
    pub sessions: usize,
    pub scenarios_per_session: usize,
    /// Draw a random subset of `features` per session instead of injecting all of them.
    pub random_subsets: bool,
}

impl Default for CorpusSynthSpec {
    fn default() -> Self {
        CorpusSynthSpec {
            seed: 0,
            features: FeatureSet::empty(),
            turns: 6,
            sessions: 10,
            scenarios_per_session: 3,
            random_subsets: false,
        }
    }
}

/// Ground truth written next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTruth {
    pub session_id: String,
    pub features: FeatureSet,
    pub scenarios: BTreeMap<ScenarioId, FeatureSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub sessions: Vec<SessionTranscript>,
    pub truth: Vec<SessionTruth>,
}

/// Multi-session corpus. A4 labels follow the rule classifier applied to each
/// session's injected set, so evaluation against the corpus is meaningful.
pub fn generate_corpus(spec: &CorpusSynthSpec) -> Result<SyntheticCorpus, SynthError> {
    check_spec(&SynthSpec { seed: spec.seed, injected: spec.features, turns: spec.turns })?;
    if spec.sessions == 0 || spec.scenarios_per_session == 0 {
        return Err(SynthError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let included: Vec<ScenarioId> = ScenarioId::included().collect();
    let per_session = spec.scenarios_per_session.min(included.len());

    let mut sessions = Vec::with_capacity(spec.sessions);
    let mut truth = Vec::with_capacity(spec.sessions);
    for n in 0..spec.sessions {
        let injected: FeatureSet = if spec.random_subsets {
            spec.features.iter().filter(|_| rng.gen_bool(0.5)).collect()
        } else {
            spec.features
        };
        let mut scenarios: Vec<ScenarioId> = included.choose_multiple(&mut rng, per_session).copied().collect();
        scenarios.sort();

        let session_id = format!("SYN-{:04}", n + 1);
        let mut dialogues = BTreeMap::new();
        let mut per_scenario = BTreeMap::new();
        for scenario in scenarios {
            dialogues.insert(scenario, build_dialogue(&mut rng, scenario, injected, spec.turns));
            per_scenario.insert(scenario, injected);
        }
        let a4 = if classify_features(injected).is_positive() { rng.gen_range(1..=2) } else { 0 };
        sessions.push(SessionTranscript {
            subject_id: format!("synthetic-{:04}", n + 1),
            session_id: session_id.clone(),
            a4_true: Some(a4),
            dialogues,
        });
        truth.push(SessionTruth { session_id, features: injected, scenarios: per_scenario });
    }
    Ok(SyntheticCorpus { sessions, truth })
}
