use std::collections::BTreeMap;

use sldx_core::analytics::{feature_counts, feature_counts_csv, phi_matrix, prevalence, FeatureCounts, FeatureMatrix};
use sldx_core::corpus::{FeatureId, FeatureSet, ScenarioId};

use crate::args::{Rows, StatsArgs, StatsKind};
use crate::error::{CliError, CliResult};
use crate::store::{load_run, reports_dir, write_file, RunRecord};

fn check_features(record: &RunRecord) -> CliResult {
    let any = record.sessions.iter().flat_map(|s| &s.scenarios).any(|r| r.features.is_some());
    if any {
        Ok(())
    } else {
        Err(CliError::domain(format!(
            "NoFeatureData: run {} ({} task) has no feature outcomes",
            record.run_id, record.task
        )))
    }
}

fn feature_matrix(record: &RunRecord, rows: Rows) -> FeatureMatrix {
    let mut m = FeatureMatrix::default();
    for s in &record.sessions {
        match rows {
            Rows::PerSession => {
                if s.scenarios.iter().any(|r| r.features.is_some()) {
                    m.push(s.session_id.clone(), s.features.unwrap_or_default());
                }
            }
            Rows::PerSessionScenario => {
                for r in &s.scenarios {
                    if let Some(f) = r.features {
                        m.push(format!("{}/{}", s.session_id, r.scenario), f);
                    }
                }
            }
        }
    }
    m
}

fn counts_markdown(columns: &[(String, FeatureCounts)]) -> String {
    let mut out = String::from("| Feature |");
    for (name, _) in columns {
        out.push_str(&format!(" {name} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for f in FeatureId::ALL {
        out.push_str(&format!("| {} {} |", f.code(), f.canonical_name()));
        for (_, c) in columns {
            out.push_str(&format!(" {} |", c.get(&f).copied().unwrap_or(0)));
        }
        out.push('\n');
    }
    out
}

pub fn stats(args: &StatsArgs) -> CliResult {
    let records = args.run_ids.iter().map(|id| load_run(&args.out, id)).collect::<CliResult<Vec<_>>>()?;
    for r in &records {
        check_features(r)?;
    }

    match args.kind {
        StatsKind::Corr => {
            for record in &records {
                let m = feature_matrix(record, args.rows);
                let c = phi_matrix(&m).map_err(|e| CliError::domain(e.to_string()))?;
                let dir = reports_dir(&args.out, &record.run_id);
                write_file(&dir.join("correlation_long.csv"), &c.to_long_csv())?;
                write_file(&dir.join("correlation_wide.csv"), &c.to_wide_csv())?;
                write_file(&dir.join("correlation.md"), &c.to_markdown())?;
                let undefined = FeatureId::ALL.iter().filter(|f| c.get(**f, **f).is_none()).count();
                println!(
                    "run {}: correlation over {} rows, {undefined} constant columns -> {}",
                    record.run_id,
                    m.len(),
                    dir.display()
                );
            }
        }
        StatsKind::Prevalence => {
            for record in &records {
                let mut per_scenario: BTreeMap<ScenarioId, Vec<FeatureSet>> = BTreeMap::new();
                for r in record.sessions.iter().flat_map(|s| &s.scenarios) {
                    if let Some(f) = r.features {
                        per_scenario.entry(r.scenario).or_default().push(f);
                    }
                }
                let table = prevalence(&per_scenario).map_err(|e| CliError::domain(e.to_string()))?;
                let dir = reports_dir(&args.out, &record.run_id);
                write_file(&dir.join("prevalence.csv"), &table.to_csv())?;
                write_file(&dir.join("prevalence.md"), &table.to_markdown())?;
                println!("run {}: prevalence over {} scenarios -> {}", record.run_id, table.rows.len(), dir.display());
            }
        }
        StatsKind::Counts => {
            let mut columns: Vec<(String, FeatureCounts)> = Vec::new();
            for record in &records {
                let duplicate = records.iter().filter(|r| r.model_id == record.model_id).count() > 1;
                let name = if duplicate {
                    format!("{} [{}]", record.model_id, record.run_id)
                } else {
                    record.model_id.clone()
                };
                let m = feature_matrix(record, args.rows);
                columns.push((name, feature_counts(&m.rows)));
            }
            let dir = reports_dir(&args.out, &records[0].run_id);
            write_file(&dir.join("feature_counts.csv"), &feature_counts_csv(&columns))?;
            write_file(&dir.join("feature_counts.md"), &counts_markdown(&columns))?;
            println!("feature counts for {} runs -> {}", columns.len(), dir.display());
        }
    }
    Ok(())
}
