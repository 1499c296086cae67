//! Acceptance suite. Runs with its own harness and prints one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::sample::subsequence;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use sldx_core::analytics::{
    confusion, metrics, phi_matrix, prevalence, FeatureMatrix, F1_UNDEFINED, PPV_UNDEFINED, SENSITIVITY_UNDEFINED,
};
use sldx_core::classifier::{aggregate_verdicts, brute_force_oracle, classify_features};
use sldx_core::corpus::{BinaryLabel, FeatureId, FeatureSet, ScenarioId};
use sldx_core::fixtures::{
    load_fixture, table7_matrix, SCRIPTED_CASE_STUDIES, TABLE5_CORPUS, TABLE6_CORPUS, TABLE7_SESSIONS,
};
use sldx_core::lexical_oracle::{detect_echo, EchoParams};
use sldx_core::prompting::build_feature_prompt;
use sldx_core::response_parser::{parse_features, parse_verdict, Verdict, VerdictValue};
use sldx_gateway::{CompletionBackend, CompletionRequest, Script, ScriptedBackend};

type Outcome = Result<String, String>;
type Check = Box<dyn Fn() -> Outcome>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn prop(result: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    result.map_err(|e| e.to_string())
}

fn sldx(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sldx"))
        .args(args)
        .current_dir(dir)
        .env("SLDX_OFFLINE", "1")
        .env_remove("SLDX_API_KEY")
        .output()
        .expect("sldx binary runs")
}

fn sldx_ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = sldx(dir, args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`sldx {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut counts = [0usize; 2];
    for mask in 0u16..1024 {
        let fs = FeatureSet::from_mask(mask).unwrap();
        let label = classify_features(fs);
        ensure!(label == brute_force_oracle(fs), "disagreement with oracle on {fs:?}");
        // independent restatement: a core feature, or at least three of the other eight
        let core = fs.contains(FeatureId::F1) || fs.contains(FeatureId::F9);
        let others = (mask & !(1 << FeatureId::F1.index()) & !(1 << FeatureId::F9.index())).count_ones();
        ensure!(label.is_positive() == (core || others > 2), "rule restatement differs on {fs:?}");
        counts[label.value() as usize] += 1;
    }
    let elapsed = started.elapsed();
    ensure!(counts == [37, 987], "label counts {counts:?}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("1024 subsets agree; 37 negative, 987 positive; {elapsed:?}"))
}

fn labels(v: &[bool]) -> Vec<BinaryLabel> {
    v.iter().map(|b| BinaryLabel::from_bool(*b)).collect()
}

fn criterion_2() -> Outcome {
    let b = |v: &[u8]| labels(&v.iter().map(|x| *x == 1).collect::<Vec<_>>());

    let cm = confusion(&b(&[1, 1, 0, 1]), &b(&[1, 0, 0, 1])).map_err(|e| e.to_string())?;
    ensure!((cm.tp, cm.fp, cm.fn_, cm.tn) == (2, 1, 0, 1), "confusion {cm:?}");
    let m = metrics(&cm).map_err(|e| e.to_string())?;
    ensure!(
        (m.accuracy, m.ppv, m.sensitivity, m.f1) == (0.75, 2.0 / 3.0, 1.0, 0.8) && m.degenerate_flags.is_empty(),
        "fixture (2,1,0,1): {m:?}"
    );

    let m = metrics(&confusion(&b(&[1, 0]), &b(&[1, 0])).unwrap()).unwrap();
    ensure!((m.accuracy, m.ppv, m.sensitivity, m.f1) == (1.0, 1.0, 1.0, 1.0), "fixture (1,0,0,1): {m:?}");

    let m = metrics(&confusion(&b(&[0, 0, 0, 0]), &b(&[0, 0, 0, 0])).unwrap()).unwrap();
    ensure!((m.accuracy, m.ppv, m.sensitivity, m.f1) == (1.0, 0.0, 0.0, 0.0), "fixture (0,0,0,4): {m:?}");
    for flag in [PPV_UNDEFINED, SENSITIVITY_UNDEFINED, F1_UNDEFINED] {
        ensure!(m.degenerate_flags.contains(flag), "fixture (0,0,0,4) lacks flag {flag}");
    }

    let pairs = (1usize..=50)
        .prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)));
    prop(runner(1000).run(&pairs, |(pred, truth)| {
        let m = metrics(&confusion(&labels(&pred), &labels(&truth)).unwrap()).unwrap();
        let count = |p: bool, t: bool| pred.iter().zip(&truth).filter(|(a, b)| **a == p && **b == t).count() as f64;
        let (tp, fp, fn_, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let ppv = div(tp, tp + fp);
        let sens = div(tp, tp + fn_);
        let f1 = div(2.0 * ppv * sens, ppv + sens);
        let acc = (tp + tn) / pred.len() as f64;
        for (got, want) in [(m.accuracy, acc), (m.ppv, ppv), (m.sensitivity, sens), (m.f1, f1)] {
            prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
        }
        Ok(())
    }))?;
    Ok("three fixtures exact; 1000 random pairs within 1e-12".into())
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn criterion_3() -> Outcome {
    let matrices = (2usize..=50).prop_flat_map(|n| {
        // bias towards sparse columns so zero-variance cases come up often
        prop::collection::vec((0u16..1024, 0u16..1024), n)
            .prop_map(|rows| rows.into_iter().map(|(a, b)| a & b).collect::<Vec<_>>())
    });
    prop(runner(1000).run(&matrices, |masks| {
        let m = FeatureMatrix::from_sets(masks.iter().map(|m| FeatureSet::from_mask(*m).unwrap()));
        let c = phi_matrix(&m).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let col = |f: FeatureId| -> Vec<f64> { masks.iter().map(|m| (m >> f.index() & 1) as f64).collect() };
        for i in FeatureId::ALL {
            for j in FeatureId::ALL {
                let want = pearson(&col(i), &col(j));
                let got = c.get(i, j);
                match (got, want) {
                    (Some(g), Some(w)) => prop_assert!((g - w).abs() <= 1e-9, "{}/{}: {} vs {}", i, j, g, w),
                    (None, None) => {}
                    _ => prop_assert!(false, "{}/{}: {:?} vs {:?}", i, j, got, want),
                }
                prop_assert_eq!(got, c.get(j, i));
            }
            let var = col(i).iter().any(|v| *v != col(i)[0]);
            prop_assert_eq!(c.get(i, i), var.then_some(1.0));
        }
        Ok(())
    }))?;
    let constant = FeatureMatrix::from_sets(vec![FeatureSet::from([FeatureId::F1]); 3]);
    let c = phi_matrix(&constant).map_err(|e| e.to_string())?;
    ensure!(c.get(FeatureId::F1, FeatureId::F1).is_none(), "constant column should give null");
    Ok("1000 matrices within 1e-9 of mean-centered Pearson; nulls, symmetry and diagonal hold".into())
}

async fn scripted_label(fixture: &str) -> Result<(FeatureSet, BinaryLabel), String> {
    let f = load_fixture(fixture).map_err(|e| e.to_string())?;
    let backend = ScriptedBackend::new(Script::parse(SCRIPTED_CASE_STUDIES).map_err(|e| e.to_string())?);
    let prompt = build_feature_prompt(&f.dialogue).map_err(|e| e.to_string())?;
    let reply = backend.complete(&CompletionRequest::new(prompt, "scripted")).await.map_err(|e| e.to_string())?;
    let parsed = parse_features(&reply.text);
    Ok((parsed.features, classify_features(parsed.features)))
}

fn criterion_4(work: &Path) -> Outcome {
    use FeatureId::*;
    let t5 = load_fixture("table5").map_err(|e| e.to_string())?;
    ensure!(detect_echo(&t5.dialogue, &EchoParams::default()), "no echo found in the table5 dialogue");

    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let (features, label) = rt.block_on(scripted_label("table5"))?;
    ensure!(features == FeatureSet::from([F1, F2, F3, F9, F10]), "table5 parsed {features:?}");
    ensure!(label == BinaryLabel::Positive, "table5 label {label:?}");
    let (features, label) = rt.block_on(scripted_label("table6"))?;
    ensure!(features == FeatureSet::from([F2, F6, F10]), "table6 parsed {features:?}");
    ensure!(!features.contains(F1) && !features.contains(F9), "table6 must rely on the cumulative rule");
    ensure!(label == BinaryLabel::Positive, "table6 label {label:?}");

    // same path through the CLI
    std::fs::write(work.join("script.json"), SCRIPTED_CASE_STUDIES).unwrap();
    for (name, text) in [("table5", TABLE5_CORPUS), ("table6", TABLE6_CORPUS)] {
        std::fs::write(work.join(format!("{name}.json")), text).unwrap();
        let corpus = format!("{name}.json");
        sldx_ok(
            work,
            &[
                "run",
                "--corpus",
                &corpus,
                "--backend",
                "scripted",
                "--script",
                "script.json",
                "--task",
                "features",
                "--run-id",
                name,
            ],
        )?;
        let csv = std::fs::read_to_string(work.join(format!("out/runs/{name}/results.csv"))).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap_or("").split(',').collect();
        ensure!(row.get(3) == Some(&"1"), "{name}: CLI predicted {row:?}");
    }
    Ok("table5 echo found; table5 and table6 scripted answers classify as 1 (library and CLI)".into())
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Wall-clock files: timing stats and cache entries stamped with their creation time.
fn is_timing_artifact(path: &Path) -> bool {
    path.ends_with("run_stats.json") || path.starts_with("out/cache")
}

fn pipeline(dir: &Path) -> Result<(), String> {
    sldx_ok(
        dir,
        &[
            "synth",
            "--seed",
            "7",
            "--sessions",
            "10",
            "--features",
            "F1,F3,F6,F10",
            "--random-subsets",
            "--out",
            "corpus.json",
            "--script",
            "script.json",
        ],
    )?;
    for (task, id) in [("features", "feat"), ("diagnose", "diag")] {
        sldx_ok(
            dir,
            &[
                "run",
                "--corpus",
                "corpus.json",
                "--backend",
                "scripted",
                "--script",
                "script.json",
                "--task",
                task,
                "--run-id",
                id,
                "--parallelism",
                "3",
            ],
        )?;
        sldx_ok(dir, &["evaluate", "--run-id", id])?;
    }
    sldx_ok(dir, &["stats", "corr", "--run-id", "feat"])?;
    sldx_ok(dir, &["stats", "prevalence", "--run-id", "feat"])?;
    sldx_ok(dir, &["stats", "counts", "--run-id", "feat"])?;
    Ok(())
}

fn criterion_5(work: &Path) -> Outcome {
    let (a, b) = (work.join("a"), work.join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    pipeline(&a)?;
    pipeline(&b)?;
    let fa: BTreeMap<_, _> = files_under(&a).into_iter().filter(|(p, _)| !is_timing_artifact(p)).collect();
    let fb: BTreeMap<_, _> = files_under(&b).into_iter().filter(|(p, _)| !is_timing_artifact(p)).collect();
    ensure!(fa.keys().eq(fb.keys()), "artifact sets differ");
    for (path, bytes) in &fa {
        ensure!(fb[path] == *bytes, "{} differs between runs", path.display());
    }
    for needed in [
        "out/runs/feat/run.json",
        "out/runs/feat/reports/metrics.csv",
        "out/runs/feat/reports/correlation_long.csv",
        "out/runs/feat/reports/prevalence.csv",
        "out/runs/diag/reports/metrics.json",
    ] {
        ensure!(fa.contains_key(Path::new(needed)), "missing {needed}");
    }

    // the live backend must refuse to start offline
    let out = sldx(&a, &["run", "--corpus", "corpus.json", "--backend", "live", "--run-id", "live"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure!(out.status.code() == Some(1) && stderr.contains("SLDX_OFFLINE"), "live backend ran offline: {stderr}");
    Ok(format!("{} artifacts byte-identical across two runs; live backend refused offline", fa.len()))
}

fn criterion_6(work: &Path) -> Outcome {
    sldx_ok(
        work,
        &[
            "synth",
            "--seed",
            "11",
            "--sessions",
            "100",
            "--features",
            "F1,F3,F6,F10",
            "--random-subsets",
            "--out",
            "big.json",
        ],
    )?;
    let started = Instant::now();
    sldx_ok(work, &["oracle", "--corpus", "big.json", "--truth", "big.json.truth.json", "--run-id", "oracle"])?;
    let elapsed = started.elapsed();
    let check: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.join("out/runs/oracle/reports/oracle_check.json")).unwrap())
            .unwrap();
    for f in ["F1", "F3", "F6", "F10"] {
        let c = &check["features"][f];
        ensure!(c["injected"].as_u64().unwrap_or(0) > 0, "{f} never injected");
        ensure!(c["sensitivity"].as_f64() == Some(1.0), "{f} sensitivity {}", c["sensitivity"]);
        ensure!(c["spurious"].as_u64() == Some(0), "{f} spurious {}", c["spurious"]);
    }
    ensure!(elapsed < Duration::from_secs(5), "oracle took {elapsed:?}");
    Ok(format!("100 sessions, {} scenarios recovered exactly in {elapsed:?}", check["scenarios"]))
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let scenarios: Vec<ScenarioId> = ScenarioId::included().collect();
    ensure!(scenarios.len() == 11, "{} included scenarios", scenarios.len());
    for mask in 0u32..(1 << 11) {
        let verdicts: Vec<Verdict> = (0..11)
            .map(|i| Verdict::of(if mask >> i & 1 == 1 { VerdictValue::Affirmative } else { VerdictValue::Negative }))
            .collect();
        let label = aggregate_verdicts(&verdicts).map_err(|e| e.to_string())?.label;
        ensure!(label == BinaryLabel::from_bool(mask != 0), "vector {mask:011b} gave {label:?}");
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("all 2048 vectors; {elapsed:?}"))
}

const SCENARIO3_ROW: [f64; 10] = [0.45, 0.64, 0.52, 0.32, 0.39, 0.59, 0.48, 0.41, 0.39, 0.36];

fn criterion_8() -> Outcome {
    let s3 = ScenarioId::new(3).unwrap();
    // independent construction: 100 sessions, the first round(v * 100) carry each feature
    let sets: Vec<FeatureSet> = (0..100)
        .map(|k| {
            FeatureId::ALL
                .iter()
                .zip(SCENARIO3_ROW)
                .filter(|(_, v)| k < (v * 100.0).round() as usize)
                .map(|(f, _)| *f)
                .collect()
        })
        .collect();
    let table = prevalence(&BTreeMap::from([(s3, sets)])).map_err(|e| e.to_string())?;
    for (f, v) in FeatureId::ALL.iter().zip(SCENARIO3_ROW) {
        ensure!((table.cell(s3, *f).unwrap() - v).abs() < 1e-12, "{f}: {:?}", table.cell(s3, *f));
    }
    let expected_row = "3,0.45,0.64,0.52,0.32,0.39,0.59,0.48,0.41,0.39,0.36";
    let csv = table.to_csv();
    let mut lines = csv.lines();
    ensure!(lines.next() == Some("scenario,F1,F2,F3,F4,F5,F6,F7,F8,F9,F10"), "header {csv}");
    ensure!(lines.next() == Some(expected_row), "row {csv}");
    let md = table.to_markdown();
    let md_row = md.lines().find(|l| l.starts_with("| 3")).unwrap_or("");
    ensure!(md_row.matches('|').count() == 12, "markdown row shape {md_row}");
    for v in ["0.45", "0.64", "0.52", "0.32", "0.39", "0.59", "0.48", "0.41", "0.36"] {
        ensure!(md_row.contains(v), "markdown row lacks {v}: {md_row}");
    }

    // the shipped fixture reproduces the same row at its own session count
    let shipped = prevalence(&table7_matrix(TABLE7_SESSIONS)).map_err(|e| e.to_string())?;
    let shipped_csv = shipped.to_csv();
    ensure!(shipped_csv.lines().any(|l| l == expected_row), "fixture row differs: {shipped_csv}");
    Ok("scenario-3 row renders as 0.45 0.64 0.52 0.32 0.39 0.59 0.48 0.41 0.39 0.36".into())
}

fn cased(word: &str, mask: u8) -> String {
    word.chars().enumerate().map(|(i, c)| if mask >> i & 1 == 1 { c.to_ascii_uppercase() } else { c }).collect()
}

fn criterion_9() -> Outcome {
    let prose = prop::collection::vec(
        prop::sample::select(vec![
            "the",
            "patient",
            "shows",
            "echolalia",
            "based",
            "on",
            "nose",
            "know",
            "noted",
            "yessir",
        ]),
        0..6,
    )
    .prop_map(|w| w.join(" "));
    let verdicts = (
        prop_oneof![Just((VerdictValue::Affirmative, "yes")), Just((VerdictValue::Negative, "no"))],
        any::<u8>(),
        "[ \t\n*\"']{0,3}",
        "[ \t\n.!*\"']{0,3}",
        prose.clone(),
    );
    prop(runner(500).run(&verdicts, |((value, word), mask, pre, post, tail)| {
        let word = cased(word, mask);
        let bare = format!("{pre}{word}{post}");
        prop_assert_eq!(parse_verdict(&bare).value, value, "{:?}", bare);
        let with_prose = format!("{pre}{word}, {tail}");
        prop_assert_eq!(parse_verdict(&with_prose).value, value, "{:?}", with_prose);
        let none = format!("{pre}{tail}");
        prop_assert_eq!(parse_verdict(&none).value, VerdictValue::Indeterminate, "{:?}", none);
        Ok(())
    }))?;

    const CUES: [&str; 5] = ["No", "Not", "No evidence of", "Absent:", "Does not show"];
    let split = subsequence(FeatureId::ALL.to_vec(), 0..=10).prop_flat_map(|c| {
        let n = c.len();
        (Just(c), prop::collection::vec(any::<bool>(), n), 0..CUES.len(), any::<bool>())
    });
    prop(runner(500).run(&split, |(chosen, side, cue, by_name)| {
        let name = |f: &FeatureId| if by_name { f.canonical_name().to_string() } else { f.code().to_string() };
        let present: Vec<FeatureId> = chosen.iter().zip(&side).filter(|(_, p)| **p).map(|(f, _)| *f).collect();
        let negated: Vec<FeatureId> = chosen.iter().zip(&side).filter(|(_, p)| !**p).map(|(f, _)| *f).collect();
        let mut text = String::new();
        if !present.is_empty() {
            text.push_str(&format!("Observed: {}. ", present.iter().map(name).collect::<Vec<_>>().join(", ")));
        }
        if !negated.is_empty() {
            text.push_str(&format!("{} {}.", CUES[cue], negated.iter().map(name).collect::<Vec<_>>().join(" or ")));
        }
        let parsed = parse_features(&text);
        prop_assert_eq!(parsed.features, present.iter().copied().collect::<FeatureSet>(), "{:?}", text);
        prop_assert_eq!(parsed.warnings.len(), negated.len(), "{:?}", text);
        Ok(())
    }))?;
    Ok("500 verdict variants and 500 negation variants, no violations".into())
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let dir = |name: &str| {
        let d = work.path().join(name);
        std::fs::create_dir_all(&d).unwrap();
        d
    };
    let criteria: Vec<(&str, Check)> = vec![
        ("classifier oracle equivalence", Box::new(criterion_1)),
        ("metrics correctness", Box::new(criterion_2)),
        ("correlation correctness", Box::new(criterion_3)),
        (
            "case-study reproduction",
            Box::new({
                let d = dir("c4");
                move || criterion_4(&d)
            }),
        ),
        (
            "end-to-end determinism",
            Box::new({
                let d = dir("c5");
                move || criterion_5(&d)
            }),
        ),
        (
            "synthetic oracle sensitivity",
            Box::new({
                let d = dir("c6");
                move || criterion_6(&d)
            }),
        ),
        ("aggregation rules", Box::new(criterion_7)),
        ("table-format fidelity", Box::new(criterion_8)),
        ("parser robustness", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
