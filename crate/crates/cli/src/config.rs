//! Run configuration: defaults, then a `key=value` file, then command-line flags.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use sldx_core::classifier::AggregationMode;
use sldx_core::corpus::ScenarioId;
use sldx_core::digest::ContentHash;
use sldx_core::prompting::PROMPT_TEMPLATE_VERSION;
use sldx_gateway::{BackendConfig, BackendKind};

use crate::args::{BackendArg, Mode, RunArgs, Task};
use crate::error::{CliError, CliResult};

pub const CONFIG_KEYS: [&str; 16] = [
    "backend",
    "cache_dir",
    "corpus",
    "endpoint",
    "max_prompt_chars",
    "max_retries",
    "mode",
    "model",
    "out",
    "parallelism",
    "scenarios",
    "script",
    "strict_parse",
    "task",
    "temperature",
    "timeout_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub backend: BackendConfig,
    pub script_path: Option<PathBuf>,
    pub prompt_template_version: String,
    pub scenarios: Option<Vec<ScenarioId>>,
    pub aggregation_mode: AggregationMode,
    pub task: Task,
    pub parallelism: NonZeroUsize,
    pub output_dir: PathBuf,
    pub strict_parse: bool,
    pub max_prompt_chars: Option<usize>,
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::malformed(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(CliError::malformed(format!("config line {}: unknown key {key:?}", n + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::malformed(format!("config line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::malformed(format!("config key {key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::malformed(format!("config key {key}: expected true or false, got {value:?}"))),
    }
}

pub fn parse_scenarios(list: &str) -> CliResult<Vec<ScenarioId>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let id: i64 = parse_value("scenarios", part.trim_start_matches(['S', 's']))?;
        let s = ScenarioId::new(id).map_err(|e| CliError::malformed(e.to_string()))?;
        if !s.is_included() {
            return Err(CliError::malformed(format!("scenario {s} has no examiner-patient dialogue")));
        }
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(CliError::malformed("scenario list is empty"));
    }
    out.sort();
    Ok(out)
}

fn mode_name(mode: AggregationMode) -> &'static str {
    match mode {
        AggregationMode::PerScenarioOr => "per-scenario-or",
        AggregationMode::UnionThenClassify => "union",
    }
}

fn parse_mode(value: &str) -> CliResult<AggregationMode> {
    match value {
        "per-scenario-or" => Ok(AggregationMode::PerScenarioOr),
        "union" => Ok(AggregationMode::UnionThenClassify),
        other => Err(CliError::malformed(format!("unknown mode {other:?}"))),
    }
}

impl RunConfig {
    /// Merges defaults, the optional config file and the flags, in that order.
    pub fn resolve(args: &RunArgs) -> CliResult<RunConfig> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        Self::merge(&file, args)
    }

    pub fn merge(file: &BTreeMap<String, String>, args: &RunArgs) -> CliResult<RunConfig> {
        let get = |k: &str| file.get(k).map(String::as_str);
        let mut backend = BackendConfig { backend: BackendKind::Live, ..BackendConfig::default() };
        if let Some(v) = get("backend") {
            backend.backend = v.parse()?;
        }
        if let Some(b) = args.backend {
            backend.backend = match b {
                BackendArg::Live => BackendKind::Live,
                BackendArg::Replay => BackendKind::Replay,
                BackendArg::Scripted => BackendKind::Scripted,
            };
        }
        if let Some(v) = args.model.clone().or(get("model").map(str::to_string)) {
            backend.model_id = v;
        }
        if let Some(v) = args.endpoint.clone().or(get("endpoint").map(str::to_string)) {
            backend.endpoint_url = v;
        }
        backend.temperature = match args.temperature {
            Some(t) => t,
            None => get("temperature").map(|v| parse_value("temperature", v)).transpose()?.unwrap_or(0.0),
        };
        if let Some(v) = args.timeout_ms.or(get("timeout_ms").map(|v| parse_value("timeout_ms", v)).transpose()?) {
            backend.timeout_ms = v;
        }
        if let Some(v) = args.max_retries.or(get("max_retries").map(|v| parse_value("max_retries", v)).transpose()?) {
            backend.max_retries = v;
        }

        let output_dir = args.out.clone().or(get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        backend.cache_dir =
            args.cache_dir.clone().or(get("cache_dir").map(PathBuf::from)).unwrap_or_else(|| output_dir.join("cache"));
        backend.validate()?;

        let corpus_path = args
            .corpus
            .clone()
            .or(get("corpus").map(PathBuf::from))
            .ok_or_else(|| CliError::malformed("no corpus given (--corpus or corpus= in --config)"))?;
        let task = match args.task {
            Some(t) => t,
            None => match get("task") {
                Some(v) => Task::parse(v).ok_or_else(|| CliError::malformed(format!("unknown task {v:?}")))?,
                None => Task::Diagnose,
            },
        };
        let aggregation_mode = match args.mode {
            Some(Mode::PerScenarioOr) => AggregationMode::PerScenarioOr,
            Some(Mode::Union) => AggregationMode::UnionThenClassify,
            None => get("mode").map(parse_mode).transpose()?.unwrap_or_default(),
        };
        let parallelism: usize = match args.parallelism {
            Some(p) => p,
            None => get("parallelism").map(|v| parse_value("parallelism", v)).transpose()?.unwrap_or(4),
        };
        let parallelism =
            NonZeroUsize::new(parallelism).ok_or_else(|| CliError::malformed("parallelism must be at least 1"))?;
        let strict_parse = args.strict_parse
            || get("strict_parse").map(|v| parse_bool("strict_parse", v)).transpose()?.unwrap_or(false);
        let scenarios = match args.scenarios.as_deref().or(get("scenarios")) {
            Some(list) => Some(parse_scenarios(list)?),
            None => None,
        };
        let max_prompt_chars = match args.max_prompt_chars {
            Some(n) => Some(n),
            None => get("max_prompt_chars").map(|v| parse_value("max_prompt_chars", v)).transpose()?,
        };
        Ok(RunConfig {
            corpus_path,
            backend,
            script_path: args.script.clone().or(get("script").map(PathBuf::from)),
            prompt_template_version: PROMPT_TEMPLATE_VERSION.to_string(),
            scenarios,
            aggregation_mode,
            task,
            parallelism,
            output_dir,
            strict_parse,
            max_prompt_chars,
        })
    }

    pub fn includes(&self, s: ScenarioId) -> bool {
        match &self.scenarios {
            Some(list) => list.contains(&s),
            None => s.is_included(),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        mode_name(self.aggregation_mode)
    }

    /// Every setting as text, sorted by key. The run identity hashes this.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let path = |p: &Path| p.display().to_string();
        let mut m = BTreeMap::new();
        m.insert("backend".into(), self.backend.backend.to_string());
        m.insert("cache_dir".into(), path(&self.backend.cache_dir));
        m.insert("corpus".into(), path(&self.corpus_path));
        m.insert("endpoint".into(), self.backend.endpoint_url.clone());
        m.insert("max_prompt_chars".into(), self.max_prompt_chars.map_or(String::new(), |n| n.to_string()));
        m.insert("max_retries".into(), self.backend.max_retries.to_string());
        m.insert("mode".into(), self.mode_name().into());
        m.insert("model".into(), self.backend.model_id.clone());
        m.insert("out".into(), path(&self.output_dir));
        m.insert("parallelism".into(), self.parallelism.to_string());
        m.insert("prompt_template_version".into(), self.prompt_template_version.clone());
        let scenarios = self
            .scenarios
            .as_ref()
            .map_or(String::new(), |l| l.iter().map(|s| s.id().to_string()).collect::<Vec<_>>().join(","));
        m.insert("scenarios".into(), scenarios);
        m.insert("script".into(), self.script_path.as_deref().map_or(String::new(), path));
        m.insert("strict_parse".into(), self.strict_parse.to_string());
        m.insert("task".into(), self.task.name().into());
        m.insert("temperature".into(), self.backend.temperature.to_string());
        m.insert("timeout_ms".into(), self.backend.timeout_ms.to_string());
        m
    }
}

pub fn snapshot_text(snapshot: &BTreeMap<String, String>) -> String {
    snapshot.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// First eight hex digits of the snapshot digest.
pub fn config_hash(snapshot: &BTreeMap<String, String>) -> String {
    let digest = ContentHash::of_parts(&[b"sldx-config/1", snapshot_text(snapshot).as_bytes()]);
    digest.to_hex()[..8].to_string()
}
