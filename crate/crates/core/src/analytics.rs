//! Evaluation metrics, binary feature correlations, prevalence tables and feature counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryLabel, FeatureId, FeatureSet, ScenarioId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("prediction and truth lengths differ: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("correlation needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("scenario {0} is not part of the evaluated protocol")]
    ExcludedScenario(ScenarioId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &[BinaryLabel], truth: &[BinaryLabel]) -> Result<ConfusionMatrix, AnalyticsError> {
    if pred.len() != truth.len() {
        return Err(AnalyticsError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub const PPV_UNDEFINED: &str = "ppv_undefined";
pub const SENSITIVITY_UNDEFINED: &str = "sensitivity_undefined";
pub const F1_UNDEFINED: &str = "f1_undefined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub ppv: f64,
    pub sensitivity: f64,
    pub f1: f64,
    /// Names of metrics reported as 0 because their denominator was 0.
    pub degenerate_flags: BTreeSet<String>,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, AnalyticsError> {
    let total = cm.total();
    if total == 0 {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut flags = BTreeSet::new();
    let mut ratio = |num: u64, den: u64, flag: &str| {
        if den == 0 {
            flags.insert(flag.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let ppv = ratio(cm.tp, cm.tp + cm.fp, PPV_UNDEFINED);
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_, SENSITIVITY_UNDEFINED);
    // harmonic mean of ppv and sensitivity, taken on counts so it rounds once
    let f1 = if cm.tp == 0 {
        flags.insert(F1_UNDEFINED.to_string());
        0.0
    } else {
        (2 * cm.tp) as f64 / (2 * cm.tp + cm.fp + cm.fn_) as f64
    };
    Ok(MetricsReport { accuracy, ppv, sensitivity, f1, degenerate_flags: flags })
}

/// Binary presence matrix: one row per session (or session/scenario pair), columns F1..F10.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub row_labels: Vec<String>,
    pub rows: Vec<FeatureSet>,
}

impl FeatureMatrix {
    pub fn push(&mut self, label: impl Into<String>, row: FeatureSet) {
        self.row_labels.push(label.into());
        self.rows.push(row);
    }

    pub fn from_sets(rows: impl IntoIterator<Item = FeatureSet>) -> Self {
        let rows: Vec<FeatureSet> = rows.into_iter().collect();
        FeatureMatrix { row_labels: (0..rows.len()).map(|i| i.to_string()).collect(), rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cell(&self, row: usize, f: FeatureId) -> u8 {
        self.rows[row].contains(f) as u8
    }
}

/// How feature matrix rows are formed from per-scenario results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowMode {
    /// One row per session, the union over its scenarios.
    PerSession,
    #[default]
    PerSessionScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub entries: [[Option<f64>; 10]; 10],
}

impl CorrelationMatrix {
    pub fn get(&self, a: FeatureId, b: FeatureId) -> Option<f64> {
        self.entries[a.index()][b.index()]
    }

    /// Long form `i,j,phi`, one line per ordered pair; undefined entries are left empty.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("i,j,phi\n");
        for a in FeatureId::ALL {
            for b in FeatureId::ALL {
                let _ = writeln!(out, "{},{},{}", a.code(), b.code(), fmt_opt(self.get(a, b), 6));
            }
        }
        out
    }

    pub fn to_wide_csv(&self) -> String {
        let mut out = String::from("feature");
        for f in FeatureId::ALL {
            let _ = write!(out, ",{}", f.code());
        }
        out.push('\n');
        for a in FeatureId::ALL {
            out.push_str(a.code());
            for b in FeatureId::ALL {
                let _ = write!(out, ",{}", fmt_opt(self.get(a, b), 6));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = markdown_header("Feature");
        for a in FeatureId::ALL {
            let _ = write!(out, "| {} |", a.code());
            for b in FeatureId::ALL {
                let cell = self.get(a, b).map_or("n/a".to_string(), |v| format!("{v:.2}"));
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or(String::new(), |v| format!("{v:.decimals$}"))
}

fn markdown_header(first: &str) -> String {
    let mut out = format!("| {first} |");
    for f in FeatureId::ALL {
        let _ = write!(out, " {} |", f.code());
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(10));
    out.push('\n');
    out
}

/// Phi coefficient of every column pair, from 2×2 contingency counts.
pub fn phi_matrix(m: &FeatureMatrix) -> Result<CorrelationMatrix, AnalyticsError> {
    let n = m.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewRows(n));
    }
    let ones: Vec<u64> =
        FeatureId::ALL.iter().map(|f| m.rows.iter().filter(|r| r.contains(*f)).count() as u64).collect();
    let n = n as u64;
    let mut entries = [[None; 10]; 10];
    for a in FeatureId::ALL {
        for b in FeatureId::ALL {
            let (i, j) = (a.index(), b.index());
            if j < i {
                entries[i][j] = entries[j][i];
                continue;
            }
            let (r1, c1) = (ones[i], ones[j]);
            let (r0, c0) = (n - r1, n - c1);
            if r1 == 0 || r0 == 0 || c1 == 0 || c0 == 0 {
                continue;
            }
            if i == j {
                entries[i][j] = Some(1.0);
                continue;
            }
            let n11 = m.rows.iter().filter(|r| r.contains(a) && r.contains(b)).count() as u64;
            // n·n11 − r1·c1 equals n11·n00 − n10·n01
            let num = (n * n11) as f64 - (r1 * c1) as f64;
            let den = ((r1 * r0) as f64 * (c1 * c0) as f64).sqrt();
            entries[i][j] = Some((num / den).clamp(-1.0, 1.0));
        }
    }
    Ok(CorrelationMatrix { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub n_sessions: u64,
    pub counts: [u64; 10],
}

impl PrevalenceRow {
    pub fn cell(&self, f: FeatureId) -> f64 {
        if self.n_sessions == 0 {
            0.0
        } else {
            self.counts[f.index()] as f64 / self.n_sessions as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceTable {
    pub rows: BTreeMap<ScenarioId, PrevalenceRow>,
}

impl PrevalenceTable {
    pub fn cell(&self, scenario: ScenarioId, f: FeatureId) -> Option<f64> {
        self.rows.get(&scenario).map(|r| r.cell(f))
    }

    /// Header `scenario,F1,…,F10`; cells to two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario");
        for f in FeatureId::ALL {
            let _ = write!(out, ",{}", f.code());
        }
        out.push('\n');
        for (s, row) in &self.rows {
            let _ = write!(out, "{}", s.id());
            for f in FeatureId::ALL {
                let _ = write!(out, ",{:.2}", row.cell(f));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = markdown_header("Scenario");
        for (s, row) in &self.rows {
            let _ = write!(out, "| {} |", s.id());
            for f in FeatureId::ALL {
                let _ = write!(out, " {:.2} |", row.cell(f));
            }
            out.push('\n');
        }
        out
    }
}

pub fn prevalence(per_scenario: &BTreeMap<ScenarioId, Vec<FeatureSet>>) -> Result<PrevalenceTable, AnalyticsError> {
    let mut table = PrevalenceTable::default();
    for (scenario, sets) in per_scenario {
        if !scenario.is_included() {
            return Err(AnalyticsError::ExcludedScenario(*scenario));
        }
        let mut counts = [0u64; 10];
        for fs in sets {
            for f in fs.iter() {
                counts[f.index()] += 1;
            }
        }
        table.rows.insert(*scenario, PrevalenceRow { n_sessions: sets.len() as u64, counts });
    }
    Ok(table)
}

pub type FeatureCounts = BTreeMap<FeatureId, u64>;

pub fn feature_counts<'a>(sets: impl IntoIterator<Item = &'a FeatureSet>) -> FeatureCounts {
    let mut counts: FeatureCounts = FeatureId::ALL.iter().map(|f| (*f, 0)).collect();
    for fs in sets {
        for f in fs.iter() {
            *counts.entry(f).or_default() += 1;
        }
    }
    counts
}

/// Side-by-side counts: `feature,<name1>,<name2>,…`.
pub fn feature_counts_csv(columns: &[(String, FeatureCounts)]) -> String {
    let mut out = String::from("feature");
    for (name, _) in columns {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for f in FeatureId::ALL {
        out.push_str(f.code());
        for (_, counts) in columns {
            let _ = write!(out, ",{}", counts.get(&f).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

/// CSV with the columns `Model,Accuracy,PPV,Sensitivity,F1 Score` as fractions.
pub fn metrics_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::from("Model,Accuracy,PPV,Sensitivity,F1 Score,flags\n");
    for (model, m) in rows {
        let flags: Vec<&str> = m.degenerate_flags.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            "{model},{:.4},{:.4},{:.4},{:.4},{}",
            m.accuracy,
            m.ppv,
            m.sensitivity,
            m.f1,
            flags.join(";")
        );
    }
    out
}

/// Markdown table with percentages to two decimals.
pub fn metrics_markdown(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::from("| Model | Accuracy | PPV | Sensitivity | F1 Score |\n|---|---:|---:|---:|---:|\n");
    for (model, m) in rows {
        let _ = writeln!(
            out,
            "| {model} | {:.2}% | {:.2}% | {:.2}% | {:.2}% |",
            m.accuracy * 100.0,
            m.ppv * 100.0,
            m.sensitivity * 100.0,
            m.f1 * 100.0
        );
    }
    out
}
