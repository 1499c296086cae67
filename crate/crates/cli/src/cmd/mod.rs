pub mod evaluate;
pub mod ingest;
pub mod oracle;
pub mod run;
pub mod stats;
pub mod synth;
