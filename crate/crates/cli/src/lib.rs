//! Verification driver: configuration, check registry, runner and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod expr;
pub mod report;
pub mod runner;

use std::path::Path;

use thiserror::Error;

pub use checks::{list_checks, Suite};
pub use config::{Overrides, RunConfig};
pub use report::VerificationReport;
pub use runner::run;

/// Exit status for a run with a failing check.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for configuration and usage errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("UnknownSuiteError: unknown suite `{0}` (expected one of basic, angles, palmer, curvature, gauss_codazzi, parallel, gauge)")]
    UnknownSuite(String),
    #[error("IoError: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

/// Run, then write the report and field dump named in the config.
pub fn execute(cfg: &RunConfig) -> Result<VerificationReport, CliError> {
    let report = run(cfg)?;
    if let Some(path) = &cfg.output.report {
        report::write_atomic(path, &report.render(cfg.output.format)?)?;
    }
    if let Some(path) = &cfg.output.dump_fields {
        report::write_atomic(Path::new(path), &runner::dump_fields(cfg)?)?;
    }
    Ok(report)
}
