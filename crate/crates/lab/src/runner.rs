//! Executes a configured experiment list and writes the report files.
//!
//! `report.json` is deterministic for a fixed config and seed; wall times go
//! to the console only.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};

use crate::config::Config;
use crate::experiments::run_experiment;
use crate::report::RunReport;

pub struct RunOutcome {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub all_passed: bool,
}

pub fn run(cfg: &Config, base_dir: &Path) -> Result<RunOutcome> {
    let out_dir = base_dir.join(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut reports = Vec::new();
    for name in &cfg.experiments {
        let started = Instant::now();
        let (report, csvs) = run_experiment(name, cfg)?;
        let elapsed = started.elapsed();
        let passed = report.checks.iter().filter(|c| c.passed()).count();
        println!(
            "{name}: {passed}/{} checks passed ({:.1}s)",
            report.checks.len(),
            elapsed.as_secs_f64()
        );
        for check in &report.checks {
            println!("  [{}] {}", check.verdict, check.name);
        }
        for (file, table) in csvs {
            table
                .write_to(&out_dir.join(&file))
                .with_context(|| format!("writing {file}"))?;
        }
        reports.push(report);
    }

    let run_report = RunReport::new(cfg.clone(), reports);
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, run_report.to_json_bytes())
        .with_context(|| format!("writing {}", report_path.display()))?;
    let all_passed = run_report.all_passed;
    Ok(RunOutcome {
        report: run_report,
        report_path,
        all_passed,
    })
}
