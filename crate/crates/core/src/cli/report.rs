//! Report assembly and flat CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::cli::config::ExperimentConfig;
use crate::cli::identities::IdentityRow;
use crate::cli::CliError;
use crate::sequences::ExtendedNorm;
use crate::solver::{CheckOutcome, SolveStatus};

pub const CSV_HEADER: &str = "n_or_t,value";

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub schema: u32,
    pub exit_code: i32,
    pub outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<&'a [IdentityRow]>,
    pub tables: Tables,
    pub metadata: Metadata<'a>,
}

/// Stand-in certificate when the weighted forcing series or integral diverges.
#[derive(Debug, Serialize)]
pub struct DivergentCertificate {
    pub weighted_bound: ExtendedNorm,
    pub margin: f64,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Serialize)]
pub struct SolveSection {
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual_max: f64,
    /// Discrete: window truncation bound; continuous: quadrature plus tail bound.
    pub error_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterate_slope_max: Option<f64>,
}

#[derive(Debug, Default, Serialize)]
pub struct Tables {
    /// `(n or t, |x - y| * n^(-alpha))`.
    pub deviation: Vec<(f64, f64)>,
    /// `(iteration, sup distance between successive iterates)`.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub config: &'a ExperimentConfig,
    pub tool: &'static str,
    pub version: &'static str,
    pub parallel: bool,
    pub elapsed_seconds: f64,
}

fn format_index(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// Two-column table with 17 significant digits.
pub fn table_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (k, v) in rows {
        let _ = writeln!(out, "{},{v:.16e}", format_index(*k));
    }
    out
}

pub fn identities_csv(rows: &[IdentityRow]) -> String {
    let mut out = String::from("check,case,max_deviation,threshold,passed\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.16e},{:e},{}", r.check, r.case, r.max_deviation, r.threshold, r.passed);
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io {
        path,
        message: e.to_string(),
    })
}
