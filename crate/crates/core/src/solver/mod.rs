//! Fixed-point construction of solutions with prescribed asymptotic behavior.
//!
//! Both solvers follow the same pattern: verify the hypotheses (weighted
//! forcing bound against the margin, containment of `y` in the framed interior
//! of `U`, `y` solves the unforced equation, `|f| <= M` on samples), then run
//! Picard iteration on `A x = y + (-1)^m r^m (a f(., x))` starting at `x = y`.

pub mod continuous;
pub mod discrete;

use serde::Serialize;

use crate::sequences::{framed_interior, Interval};

/// Relative slack for comparing a certified bound against the margin. The
/// bound is a floating-point sum or quadrature, so an exact equality case
/// such as `sum 2^-n = 1 <= 1` lands a few ulps either side.
pub const MARGIN_SLACK: f64 = 1e-9;

/// Relative slack for the sampled `|f| <= M` check.
pub const F_BOUND_SLACK: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    HypothesisFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Central-difference step for continuous residuals.
    pub residual_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            residual_step: 1e-3,
        }
    }
}

/// Names of the individual hypothesis checks, as they appear in reports.
pub mod checks {
    pub const WEIGHTED_FORCING: &str = "weighted-forcing-bound";
    pub const INTERIOR: &str = "approximant-in-framed-interior";
    pub const APPROXIMANT: &str = "approximant-solves-unforced-equation";
    pub const F_BOUND: &str = "nonlinearity-bound";
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Samples `|f(at, t)|` on `t in y + margin * {-1, -1/2, 0, 1/2, 1}` and
/// returns (number of samples, largest value, first offending point).
pub(crate) fn sample_f_bound(
    points: impl Iterator<Item = (f64, f64)>,
    margin: f64,
    domain: Interval,
    f: impl Fn(f64, f64) -> f64,
) -> (usize, f64, Option<(f64, f64)>) {
    let mut count = 0;
    let mut max = 0.0f64;
    let mut worst = None;
    for (at, y) in points {
        for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let t = y + frac * margin;
            if !domain.contains(t) {
                continue;
            }
            let v = f(at, t).abs();
            count += 1;
            if !(v <= max) {
                max = v;
                worst = Some((at, t));
            }
        }
    }
    (count, max, worst)
}

pub(crate) fn interior_of(domain: Interval, margin: f64) -> Interval {
    framed_interior(domain, margin)
}
