use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sldx", version, about = "Screen interview transcripts for social language deficits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and list invariant violations.
    Ingest(IngestArgs),
    /// Build a corpus file from diarized segments and scenario boundaries.
    Import(ImportArgs),
    /// Prompt a completion backend for every dialogue and store the outcomes.
    Run(RunArgs),
    /// Score a stored run against the corpus labels.
    Evaluate(EvaluateArgs),
    /// Correlation, prevalence and count tables from feature runs.
    Stats(StatsArgs),
    /// Write a seeded synthetic corpus with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Run the lexical detectors over a corpus, storing a feature run.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Reject unknown fields instead of warning.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentFormat {
    /// Speakers already tagged `examiner` / `patient`.
    RoleLabeled,
    /// Arbitrary speaker tags; roles are inferred unless given.
    Generic,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub segments: PathBuf,
    #[arg(long)]
    pub boundaries: PathBuf,
    #[arg(long, value_enum, default_value = "role-labeled")]
    pub format: SegmentFormat,
    /// Speaker tag of the examiner (generic format); inferred from question rates if absent.
    #[arg(long, requires = "patient_tag")]
    pub examiner_tag: Option<String>,
    #[arg(long, requires = "examiner_tag")]
    pub patient_tag: Option<String>,
    #[arg(long)]
    pub subject_id: String,
    #[arg(long)]
    pub session_id: String,
    #[arg(long)]
    pub a4: Option<i64>,
    /// Join consecutive turns of the same speaker.
    #[arg(long)]
    pub merge_adjacent: bool,
    /// Add the session to an existing corpus file instead of replacing it.
    #[arg(long)]
    pub append: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Diagnose,
    Features,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Diagnose => "diagnose",
            Task::Features => "features",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "diagnose" => Some(Task::Diagnose),
            "features" => Some(Task::Features),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    PerScenarioOr,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Live,
    Replay,
    Scripted,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// key=value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Script file for the scripted backend.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Accept only a bare yes/no answer in diagnose runs.
    #[arg(long)]
    pub strict_parse: bool,
    /// Comma-separated scenario ids to run instead of all included scenarios.
    #[arg(long)]
    pub scenarios: Option<String>,
    /// Trim dialogues from the end so each prompt stays under this many characters.
    #[arg(long)]
    pub max_prompt_chars: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run_id: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsKind {
    Corr,
    Prevalence,
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rows {
    PerSession,
    PerSessionScenario,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(value_enum)]
    pub kind: StatsKind,
    /// Run to read; repeat for side-by-side counts.
    #[arg(long = "run-id", required = true)]
    pub run_ids: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "per-session-scenario")]
    pub rows: Rows,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated subset of F1, F3, F6, F10.
    #[arg(long, default_value = "")]
    pub features: String,
    #[arg(long, default_value_t = 6)]
    pub turns: usize,
    #[arg(long, default_value_t = 10)]
    pub sessions: usize,
    #[arg(long, default_value_t = 3)]
    pub scenarios_per_session: usize,
    /// Inject a random subset of the features per session.
    #[arg(long)]
    pub random_subsets: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write a scripted-backend file answering every prompt from the ground truth.
    #[arg(long)]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Ground-truth sidecar to check the detections against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Subject name enabling the name-based self-reference rule.
    #[arg(long)]
    pub subject_name: Option<String>,
}
