//! Report structures. `report.json` is a pure function of config and seed:
//! no timestamps or timings go into it, so identical runs are byte-identical.
//! Wall time is printed to the console instead.

use std::collections::BTreeMap;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// One verifiable record: the verdict is recomputable from lhs, rhs and
/// tolerance alone. The tolerance is relative to rhs when rhs is positive
/// and absolute when rhs is zero; 0 <= 0 passes vacuously.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub tolerance: f64,
    pub verdict: String,
}

impl CheckRecord {
    pub fn bound(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let pass = if rhs > 0.0 {
            lhs <= rhs * (1.0 + tolerance)
        } else {
            lhs <= tolerance
        };
        CheckRecord {
            name: name.into(),
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { lhs },
            tolerance,
            verdict: if pass { "pass" } else { "fail" }.into(),
        }
    }

    /// A boolean fact stated as a bound: 0 against 0 when it holds.
    pub fn fact(name: impl Into<String>, holds: bool) -> Self {
        CheckRecord::bound(name, if holds { 0.0 } else { 1.0 }, 0.0, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub checks: Vec<CheckRecord>,
    /// Fitted constants and other scalar observables, in stable key order.
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            checks: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.constants.insert(key.into(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub corpus_version: u32,
    pub config: crate::config::Config,
    pub experiments: Vec<ExperimentReport>,
    pub all_passed: bool,
}

impl RunReport {
    pub fn new(config: crate::config::Config, experiments: Vec<ExperimentReport>) -> Self {
        let all_passed = experiments.iter().all(|e| e.all_passed());
        RunReport {
            schema_version: SCHEMA_VERSION,
            corpus_version: crate::corpus::CORPUS_VERSION,
            config,
            experiments,
            all_passed,
        }
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serialization");
        bytes.push(b'\n');
        bytes
    }
}

/// Plot data: rows of named columns, written as plain CSV.
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}
