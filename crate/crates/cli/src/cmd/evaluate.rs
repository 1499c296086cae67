use serde::Serialize;
use sldx_core::analytics::{confusion, metrics, metrics_csv, metrics_markdown, ConfusionMatrix, MetricsReport};

use crate::args::EvaluateArgs;
use crate::error::{CliError, CliResult};
use crate::store::{load_run, reports_dir, to_json_string, write_file};

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    run_id: &'a str,
    task: &'a str,
    model_id: &'a str,
    evaluated: usize,
    missing_ground_truth: Vec<&'a str>,
    missing_prediction: Vec<&'a str>,
    confusion: ConfusionMatrix,
    metrics: &'a MetricsReport,
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult {
    let record = load_run(&args.out, &args.run_id)?;
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    let mut missing_ground_truth = Vec::new();
    let mut missing_prediction = Vec::new();
    for s in &record.sessions {
        match (s.predicted_label, s.true_label) {
            (Some(p), Some(t)) => {
                pred.push(p);
                truth.push(t);
            }
            (_, None) => missing_ground_truth.push(s.session_id.as_str()),
            (None, Some(_)) => missing_prediction.push(s.session_id.as_str()),
        }
    }
    for id in &missing_ground_truth {
        eprintln!("MissingGroundTruth: session {id}");
    }
    for id in &missing_prediction {
        eprintln!("no prediction for session {id}");
    }
    if pred.is_empty() {
        return Err(CliError::domain(format!(
            "no evaluable sessions in run {} ({} without ground truth)",
            record.run_id,
            missing_ground_truth.len()
        )));
    }

    let cm = confusion(&pred, &truth).map_err(|e| CliError::domain(e.to_string()))?;
    let report = metrics(&cm).map_err(|e| CliError::domain(e.to_string()))?;
    let model = format!("{} ({})", record.model_id, record.task);
    let rows = vec![(model, report.clone())];

    let dir = reports_dir(&args.out, &record.run_id);
    write_file(&dir.join("metrics.csv"), &metrics_csv(&rows))?;
    write_file(&dir.join("metrics.md"), &metrics_markdown(&rows))?;
    let file = MetricsFile {
        run_id: &record.run_id,
        task: &record.task,
        model_id: &record.model_id,
        evaluated: pred.len(),
        missing_ground_truth,
        missing_prediction,
        confusion: cm,
        metrics: &report,
    };
    write_file(&dir.join("metrics.json"), &to_json_string(&file))?;

    println!("evaluated {} sessions: tp={} fp={} fn={} tn={}", pred.len(), cm.tp, cm.fp, cm.fn_, cm.tn);
    println!(
        "Accuracy {:.4}  PPV {:.4}  Sensitivity {:.4}  F1 Score {:.4}",
        report.accuracy, report.ppv, report.sensitivity, report.f1
    );
    for flag in &report.degenerate_flags {
        println!("flag: {flag}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}
