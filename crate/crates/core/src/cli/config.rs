//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::registry::{Family, Nonlinearity};
use crate::cli::CliError;
use crate::exec::Execution;
use crate::sequences::Interval;
use crate::solver::{DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Difference,
    Ode,
    IdentitySuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identities: Option<IdentitySuiteConfig>,
    #[serde(default)]
    pub controls: Controls,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Data of a difference or differential equation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub order: u32,
    /// First index `p` (difference equations).
    #[serde(default = "default_start")]
    pub start: u64,
    /// Initial time (differential equations).
    #[serde(default)]
    pub t0: f64,
    pub a: Family,
    #[serde(default = "zero_family")]
    pub b: Family,
    #[serde(default = "zero_family")]
    pub y: Family,
    pub f: Nonlinearity,
    /// `M`; defaults to `max(1, sup |f|)` from the registry.
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default = "Interval::real_line")]
    pub domain: Interval,
    pub margin: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Defaults to the registry constant when one is known.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySuiteConfig {
    #[serde(default = "default_max_order")]
    pub max_order: u32,
    #[serde(default = "default_max_order_continuous")]
    pub max_order_continuous: u32,
    /// Discrete checks run on `[1, range_end]` over a window of `controls.window` values.
    #[serde(default = "default_range_end")]
    pub range_end: u64,
    #[serde(default = "default_points")]
    pub points: Vec<f64>,
    /// Order-swap intervals `(a, b)`.
    #[serde(default = "default_intervals")]
    pub intervals: Vec<(f64, f64)>,
}

impl Default for IdentitySuiteConfig {
    fn default() -> Self {
        IdentitySuiteConfig {
            max_order: default_max_order(),
            max_order_continuous: default_max_order_continuous(),
            range_end: default_range_end(),
            points: default_points(),
            intervals: default_intervals(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Controls {
    pub tol: f64,
    pub max_iter: usize,
    /// Number of indices `N` in the discrete window `[p, p + N - 1]`.
    pub window: u64,
    pub grid_first_step: f64,
    /// Relative step growth `delta` of the geometric grid.
    pub grid_growth: f64,
    pub t_end: f64,
    pub quad_abs_tol: f64,
    /// Central-difference step for residuals and derivative identities.
    pub step: f64,
    pub execution: Execution,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            window: 200,
            grid_first_step: 1e-3,
            grid_growth: 0.0025,
            t_end: 40.0,
            quad_abs_tol: 1e-12,
            step: 1e-3,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_start() -> u64 {
    1
}
fn zero_family() -> Family {
    Family::Zero
}
fn default_max_order() -> u32 {
    4
}
fn default_max_order_continuous() -> u32 {
    3
}
fn default_range_end() -> u64 {
    50
}
fn default_points() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0]
}
fn default_intervals() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)]
}

fn field(name: &str, result: crate::Result<()>) -> Result<(), CliError> {
    result.map_err(|e| CliError::field(name, e.to_string()))
}

fn require(name: &str, ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::field(name, msg))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            CliError::Parse {
                path: origin.to_path_buf(),
                line: e.line(),
                column: e.column(),
                message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path)
    }

    /// Checks everything that does not need the solver: names, numerics, sections.
    pub fn validate(&self) -> Result<(), CliError> {
        require(
            "schema",
            self.schema == SCHEMA_VERSION,
            format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
        )?;
        self.controls.validate()?;
        match self.kind {
            ExperimentKind::Difference | ExperimentKind::Ode => {
                require("identities", self.identities.is_none(), "only valid for kind identity-suite")?;
                let p = self
                    .problem
                    .as_ref()
                    .ok_or_else(|| CliError::field("problem", "required for this kind"))?;
                p.validate(self.kind, &self.controls)
            }
            ExperimentKind::IdentitySuite => {
                require("problem", self.problem.is_none(), "not used by kind identity-suite")?;
                self.identities.clone().unwrap_or_default().validate(&self.controls)
            }
        }
    }

    pub fn identity_suite(&self) -> IdentitySuiteConfig {
        self.identities.clone().unwrap_or_default()
    }
}

impl Controls {
    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| require(name, v > 0.0 && v.is_finite(), format!("must be positive and finite, got {v}"));
        positive("controls.tol", self.tol)?;
        require("controls.max_iter", self.max_iter > 0, "must be positive")?;
        require("controls.window", self.window > 0, "must be positive")?;
        positive("controls.grid_first_step", self.grid_first_step)?;
        positive("controls.grid_growth", self.grid_growth)?;
        positive("controls.t_end", self.t_end)?;
        positive("controls.quad_abs_tol", self.quad_abs_tol)?;
        positive("controls.step", self.step)
    }
}

impl ProblemConfig {
    pub fn nonlinearity_bound(&self) -> Result<f64, CliError> {
        match self.bound {
            Some(m) => Ok(m),
            None => self.f.bound(self.domain).map(|m| m.max(1.0)).ok_or_else(|| {
                CliError::field("problem.bound", "required: the nonlinearity has no bound on an unbounded domain")
            }),
        }
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.lipschitz.or_else(|| self.f.lipschitz(self.domain))
    }

    fn validate(&self, kind: ExperimentKind, controls: &Controls) -> Result<(), CliError> {
        require("problem.order", self.order >= 1, "must be >= 1")?;
        field("problem.a", self.a.validate())?;
        field("problem.b", self.b.validate())?;
        field("problem.y", self.y.validate())?;
        field("problem.f", self.f.validate())?;
        let m = self.nonlinearity_bound()?;
        require("problem.bound", m >= 1.0 && m.is_finite(), format!("must be >= 1, got {m}"))?;
        require("problem.domain", !self.domain.is_empty(), "interval is empty")?;
        require(
            "problem.margin",
            self.margin > 0.0 && self.margin.is_finite(),
            format!("must be positive, got {}", self.margin),
        )?;
        require("problem.alpha", self.alpha <= 0.0, format!("must be <= 0, got {}", self.alpha))?;
        if let Some(l) = self.lipschitz {
            require("problem.lipschitz", l >= 0.0 && l.is_finite(), format!("must be >= 0, got {l}"))?;
        }
        match kind {
            ExperimentKind::Difference => {
                require("problem.start", self.start >= 1, "must be >= 1")?;
                require(
                    "controls.window",
                    controls.window > self.order as u64,
                    format!("must exceed the order {}", self.order),
                )?;
            }
            _ => {
                require("problem.t0", self.t0 >= 0.0 && self.t0.is_finite(), format!("must be >= 0, got {}", self.t0))?;
                require(
                    "controls.t_end",
                    controls.t_end > self.t0,
                    format!("must exceed t0 = {}", self.t0),
                )?;
                if self.t0 == 0.0 {
                    for (name, fam) in [("problem.a", self.a), ("problem.b", self.b), ("problem.y", self.y)] {
                        require(name, !fam.is_singular_at_zero(), "power family is singular at t0 = 0; set t0 > 0")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl IdentitySuiteConfig {
    fn validate(&self, controls: &Controls) -> Result<(), CliError> {
        require("identities.max_order", self.max_order >= 1, "must be >= 1")?;
        require("identities.max_order_continuous", self.max_order_continuous >= 1, "must be >= 1")?;
        require("identities.range_end", self.range_end >= 1, "must be >= 1")?;
        require(
            "controls.window",
            controls.window >= self.range_end + self.max_order as u64,
            format!("must be at least range_end + max_order = {}", self.range_end + self.max_order as u64),
        )?;
        for (i, &t) in self.points.iter().enumerate() {
            require(
                &format!("identities.points[{i}]"),
                t.is_finite() && t - 0.5 * self.max_order_continuous as f64 * controls.step >= 0.0,
                format!("point {t} must be finite and leave room for the difference stencil above 0"),
            )?;
        }
        for (i, &(a, b)) in self.intervals.iter().enumerate() {
            require(
                &format!("identities.intervals[{i}]"),
                a.is_finite() && b.is_finite() && a < b,
                format!("needs finite a < b, got ({a}, {b})"),
            )?;
        }
        Ok(())
    }
}
