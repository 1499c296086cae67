//! Core library for screening social language disorders in interview transcripts.
//!
//! The pipeline turns diarized examiner/patient dialogues into prompts, parses model
//! completions into verdicts and feature sets, applies the rule-based A4 classifier and
//! computes evaluation statistics. A deterministic lexical oracle and synthetic corpus
//! generator allow the whole chain to be exercised without a language model.

pub mod analytics;
pub mod classifier;
pub mod corpus;
pub mod diarization;
pub mod digest;
pub mod fixtures;
pub mod lexical_oracle;
pub mod prompting;
pub mod response_parser;
