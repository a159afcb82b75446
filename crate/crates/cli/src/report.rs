//! Verification reports and their serializations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::{CheckInfo, Suite};
use crate::config::{Format, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check: String,
    pub suite: Suite,
    pub anchor: String,
    pub point: Vec<f64>,
    /// Absent when the computation failed or produced a non-finite value.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    pub kind: String,
    pub message: String,
}

impl Record {
    pub fn measured(info: &CheckInfo, point: &[f64], residual: f64, tolerance: f64) -> Self {
        let finite = residual.is_finite();
        Record {
            check: info.id.to_string(),
            suite: info.suite,
            anchor: info.anchor.to_string(),
            point: point.to_vec(),
            residual: finite.then_some(residual),
            tolerance,
            pass: finite && residual <= tolerance,
            error: (!finite).then(|| RecordError {
                kind: "NonFinite".into(),
                message: format!("residual is {residual}"),
            }),
        }
    }

    pub fn failed(
        info: &CheckInfo,
        point: &[f64],
        tolerance: f64,
        kind: &str,
        message: String,
    ) -> Self {
        Record {
            check: info.id.to_string(),
            suite: info.suite,
            anchor: info.anchor.to_string(),
            point: point.to_vec(),
            residual: None,
            tolerance,
            pass: false,
            error: Some(RecordError {
                kind: kind.to_string(),
                message,
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
    pub suites: BTreeMap<String, SuiteSummary>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: String,
    pub config: RunConfig,
    pub checks: Vec<Record>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(config: RunConfig, suites: &[Suite], checks: Vec<Record>, wall_time_s: f64) -> Self {
        let mut by_suite: BTreeMap<String, SuiteSummary> = suites
            .iter()
            .map(|s| (s.as_str().to_string(), SuiteSummary::default()))
            .collect();
        for r in &checks {
            let s = by_suite.entry(r.suite.as_str().to_string()).or_default();
            s.total += 1;
            if r.pass {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
            if let Some(x) = r.residual {
                s.max_residual = Some(s.max_residual.map_or(x, |m: f64| m.max(x)));
            }
        }
        let passed = checks.iter().filter(|r| r.pass).count();
        let summary = Summary {
            total: checks.len(),
            passed,
            failed: checks.len() - passed,
            all_pass: passed == checks.len(),
            suites: by_suite,
            wall_time_s,
        };
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            checks,
            summary,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.all_pass
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter_map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The checks array flattened to CSV; points are `;`-separated.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "check",
            "suite",
            "anchor",
            "point",
            "residual",
            "tolerance",
            "pass",
            "error",
        ])
        .map_err(csv_err)?;
        for r in &self.checks {
            let point = r
                .point
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(";");
            let residual = r.residual.map(|x| format!("{x:e}")).unwrap_or_default();
            let error = r.error.as_ref().map(|e| e.kind.clone()).unwrap_or_default();
            w.write_record([
                r.check.as_str(),
                r.suite.as_str(),
                r.anchor.as_str(),
                &point,
                &residual,
                &format!("{:e}", r.tolerance),
                if r.pass { "true" } else { "false" },
                &error,
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
