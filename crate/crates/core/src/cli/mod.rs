//! Batch front end: JSON experiment configs in, `report.json` and CSV tables out.
//!
//! Exit codes: 0 converged or all identities passed, 1 usage or config error,
//! 2 hypothesis failed (no iterations run), 3 iteration limit reached,
//! 4 an identity check exceeded its threshold.

pub mod config;
pub mod identities;
pub mod registry;
pub mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::error::Error;
use crate::quadrature::QuadratureConfig;
use crate::sequences::{ExtendedNorm, SequenceWindow};
use crate::solver::continuous::{solve_ode, GridConfig, OdeSpec};
use crate::solver::discrete::{solve, DifferenceEquationSpec};
use crate::solver::{checks, CheckOutcome, SolveOptions, SolveStatus};

use config::{ExperimentConfig, ExperimentKind, ProblemConfig};
use report::{DivergentCertificate, Metadata, Report, SolveSection, Tables};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_MAX_ITER: i32 = 3;
pub const EXIT_IDENTITY: i32 = 4;

pub const DEFAULT_OUT_DIR: &str = "remop-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Command-line overrides for a single run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub summary: String,
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::HypothesisFailed => EXIT_HYPOTHESIS,
        SolveStatus::MaxIterations => EXIT_MAX_ITER,
    }
}

fn outcome_name(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_HYPOTHESIS => "hypothesis-failed",
        EXIT_MAX_ITER => "max-iterations",
        EXIT_IDENTITY => "identity-failed",
        _ => "error",
    }
}

fn resolve_out_dir(config_path: &Path, cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(dir) = &opts.out_dir {
        return dir.clone();
    }
    match &cfg.output.out_dir {
        Some(dir) if dir.is_relative() => config_path.parent().unwrap_or(Path::new(".")).join(dir),
        Some(dir) => dir.clone(),
        None => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Loads, validates and runs one experiment, writing its report files.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(tol) = opts.tol {
        cfg.controls.tol = tol;
    }
    if let Some(max_iter) = opts.max_iter {
        cfg.controls.max_iter = max_iter;
    }
    cfg.validate()?;
    let out_dir = resolve_out_dir(config_path, &cfg, opts);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io {
        path: out_dir.clone(),
        message: e.to_string(),
    })?;
    let (exit_code, summary) = execute(&cfg, &out_dir)?;
    Ok(RunOutcome {
        exit_code,
        out_dir,
        summary,
    })
}

/// Runs a validated config and writes `report.json` plus tables into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(i32, String), CliError> {
    let clock = Instant::now();
    let mut certificate = None;
    let mut solve_section = None;
    let mut tables = Tables::default();
    let mut rows = None;
    let (exit_code, summary) = match cfg.kind {
        ExperimentKind::IdentitySuite => {
            let r = identities::run_suite(&cfg.identity_suite(), &cfg.controls)?;
            let failed: Vec<String> = r.iter().filter(|r| !r.passed).map(|r| format!("{} [{}]", r.check, r.case)).collect();
            report::write_file(out_dir, "identities.csv", &report::identities_csv(&r))?;
            rows = Some(r);
            if failed.is_empty() {
                (EXIT_OK, "all identity checks passed".to_string())
            } else {
                (EXIT_IDENTITY, format!("identity checks failed: {}", failed.join(", ")))
            }
        }
        ExperimentKind::Difference | ExperimentKind::Ode => {
            let problem = cfg.problem.as_ref().expect("validated");
            let outcome = match cfg.kind {
                ExperimentKind::Difference => run_difference(problem, cfg),
                _ => run_ode(problem, cfg),
            };
            match outcome {
                Ok(done) => {
                    certificate = Some(done.certificate);
                    tables = done.tables;
                    let code = status_code(done.solve.status);
                    let summary = match done.solve.status {
                        SolveStatus::HypothesisFailed => format!("hypothesis failed: {}", done.failures.join(", ")),
                        s => format!(
                            "{} after {} iterations, residual_max = {:e}",
                            serde_json::to_value(s).unwrap_or_default().as_str().unwrap_or(""),
                            done.solve.iterations,
                            done.solve.residual_max
                        ),
                    };
                    solve_section = Some(done.solve);
                    (code, summary)
                }
                Err(Error::NonSummable { .. } | Error::NonIntegrable { .. }) => {
                    let detail = "weighted forcing series or integral diverges for the declared envelope of a".to_string();
                    certificate = Some(json(&DivergentCertificate {
                        weighted_bound: ExtendedNorm::Infinite,
                        margin: problem.margin,
                        checks: vec![CheckOutcome {
                            name: checks::WEIGHTED_FORCING,
                            passed: false,
                            detail,
                        }],
                    }));
                    solve_section = Some(SolveSection {
                        status: SolveStatus::HypothesisFailed,
                        iterations: 0,
                        residual_max: f64::NAN,
                        error_bound: f64::INFINITY,
                        residual_step: None,
                        iterate_slope_max: None,
                    });
                    (EXIT_HYPOTHESIS, format!("hypothesis failed: {}", checks::WEIGHTED_FORCING))
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    report::write_file(out_dir, "deviation.csv", &report::table_csv(&tables.deviation))?;
    report::write_file(out_dir, "trace.csv", &report::table_csv(&tables.trace))?;
    let report = Report {
        schema: config::SCHEMA_VERSION,
        exit_code,
        outcome: outcome_name(exit_code),
        certificate,
        solve: solve_section,
        identities: rows.as_deref(),
        tables,
        metadata: Metadata {
            config: cfg,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            parallel: cfg.controls.execution.is_parallel(),
            elapsed_seconds: clock.elapsed().as_secs_f64(),
        },
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::field("report", e.to_string()))?;
    report::write_file(out_dir, "report.json", &(text + "\n"))?;
    Ok((exit_code, summary))
}

struct Finished {
    certificate: serde_json::Value,
    solve: SolveSection,
    tables: Tables,
    failures: Vec<&'static str>,
}

fn json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn trace_table(trace: &[f64]) -> Vec<(f64, f64)> {
    trace.iter().enumerate().map(|(i, g)| ((i + 1) as f64, *g)).collect()
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        tol: cfg.controls.tol,
        max_iter: cfg.controls.max_iter,
        residual_step: cfg.controls.step,
    }
}

fn run_difference(p: &ProblemConfig, cfg: &ExperimentConfig) -> crate::Result<Finished> {
    let start = p.start;
    let end = start + cfg.controls.window - 1;
    let sample = |fam: registry::Family| SequenceWindow::from_fn(start, end, move |n| fam.eval(n as f64));
    let f = p.f.clone();
    let spec = DifferenceEquationSpec {
        order: p.order,
        a: sample(p.a)?,
        a_env: p.a.envelope()?,
        b: sample(p.b)?,
        f: Arc::new(move |_, x| f.eval(x)),
        bound: p.nonlinearity_bound().map_err(|e| Error::Invalid(e.to_string()))?,
        domain: p.domain,
        margin: p.margin,
        alpha: p.alpha,
        y: sample(p.y)?,
        lipschitz: p.lipschitz_constant(),
        execution: cfg.controls.execution,
    };
    let r = solve(&spec, &solve_options(cfg))?;
    Ok(Finished {
        failures: r.hypotheses.failures(),
        certificate: json(&r.hypotheses),
        solve: SolveSection {
            status: r.status,
            iterations: r.iterations,
            residual_max: r.residual_max,
            error_bound: r.truncation_bound,
            residual_step: None,
            iterate_slope_max: None,
        },
        tables: Tables {
            deviation: r.deviation_profile.iter().map(|&(n, v)| (n as f64, v)).collect(),
            trace: trace_table(&r.trace),
        },
    })
}

fn run_ode(p: &ProblemConfig, cfg: &ExperimentConfig) -> crate::Result<Finished> {
    let c = &cfg.controls;
    let f = p.f.clone();
    let spec = OdeSpec {
        order: p.order,
        t0: p.t0,
        a: p.a.function(),
        a_env: p.a.envelope()?,
        b: p.b.function(),
        f: Arc::new(move |_, x| f.eval(x)),
        bound: p.nonlinearity_bound().map_err(|e| Error::Invalid(e.to_string()))?,
        domain: p.domain,
        margin: p.margin,
        alpha: p.alpha,
        y: p.y.function(),
        quadrature: QuadratureConfig::with_abs_tol(c.quad_abs_tol),
        grid: GridConfig {
            first_step: c.grid_first_step,
            growth: c.grid_growth,
            t_end: c.t_end,
        },
        lipschitz: p.lipschitz_constant(),
        execution: c.execution,
    };
    let r = solve_ode(&spec, &solve_options(cfg))?;
    Ok(Finished {
        failures: r.hypotheses.failures(),
        certificate: json(&r.hypotheses),
        solve: SolveSection {
            status: r.status,
            iterations: r.iterations,
            residual_max: r.residual_max,
            error_bound: r.quadrature_error_bound,
            residual_step: Some(r.residual_step),
            iterate_slope_max: Some(r.iterate_slope_max),
        },
        tables: Tables {
            deviation: r.deviation_profile.clone(),
            trace: trace_table(&r.trace),
        },
    })
}
