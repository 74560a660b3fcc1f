//! Solutions of `Delta^m x_n = a_n f(n, x_n) + b_n` with `x = y + o(n^alpha)`.

use std::sync::Arc;

use serde::Serialize;

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::remainder::discrete::{rm_window, summability_certificate, RemainderInput};
use crate::remainder::SummabilityReport;
use crate::sequences::{forward_difference, sup_metric, ExtendedNorm, Interval, SequenceWindow};
use crate::solver::{
    checks, interior_of, sample_f_bound, CheckOutcome, SolveOptions, SolveStatus, F_BOUND_SLACK, MARGIN_SLACK,
};

pub type IndexedFn = Arc<dyn Fn(u64, f64) -> f64 + Send + Sync>;

/// Relative tolerance for `Delta^m y = b` on the window.
pub const APPROXIMANT_TOL: f64 = 1e-9;

#[derive(Clone)]
pub struct DifferenceEquationSpec {
    pub order: u32,
    pub a: SequenceWindow,
    pub a_env: DecayEnvelope,
    pub b: SequenceWindow,
    pub f: IndexedFn,
    /// `M >= 1` with `|f| <= M` on `N_p x U`.
    pub bound: f64,
    pub domain: Interval,
    pub margin: f64,
    pub alpha: f64,
    pub y: SequenceWindow,
    pub lipschitz: Option<f64>,
    pub execution: Execution,
}

impl std::fmt::Debug for DifferenceEquationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DifferenceEquationSpec")
            .field("order", &self.order)
            .field("start", &self.start())
            .field("end", &self.end())
            .field("bound", &self.bound)
            .field("domain", &self.domain)
            .field("margin", &self.margin)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl DifferenceEquationSpec {
    pub fn start(&self) -> u64 {
        self.a.start()
    }

    pub fn end(&self) -> u64 {
        self.a.end()
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Invalid("order m must be >= 1".into()));
        }
        if !(self.bound >= 1.0 && self.bound.is_finite()) {
            return Err(Error::Invalid(format!("bound M must be >= 1, got {}", self.bound)));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Invalid(format!("margin mu must be > 0, got {}", self.margin)));
        }
        if !(self.alpha <= 0.0) {
            return Err(Error::Invalid(format!("alpha must be <= 0, got {}", self.alpha)));
        }
        if let Some(l) = self.lipschitz {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Invalid(format!("Lipschitz constant must be >= 0, got {l}")));
            }
        }
        self.a.check_same_shape(&self.b)?;
        self.a.check_same_shape(&self.y)?;
        if self.a.len() <= self.order as usize {
            return Err(Error::InsufficientData(format!(
                "window of {} values cannot carry {} differences",
                self.a.len(),
                self.order
            )));
        }
        self.a_env.validate()
    }

    fn sign(&self) -> f64 {
        if self.order % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Envelope for `a_n f(n, x_n)`, i.e. `M * env(a)`.
    fn forcing_envelope(&self) -> DecayEnvelope {
        self.a_env.scaled(self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `sum_{n >= p} n^(m-1-alpha) |a_n|`.
    pub weighted_sum: SummabilityReport,
    /// `M` times the certified upper bound of `weighted_sum`.
    pub weighted_bound: ExtendedNorm,
    pub margin: f64,
    pub interior: Interval,
    /// Max over the window of `|Delta^m y - b|`.
    pub approximant_deviation: f64,
    pub f_samples: usize,
    pub f_max_sampled: f64,
    /// `L * M * sum n^(m-1) |a_n|` when a Lipschitz constant is declared.
    pub contraction_estimate: Option<f64>,
    pub checks: Vec<CheckOutcome>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

pub fn check_hypotheses(spec: &DifferenceEquationSpec) -> Result<HypothesisReport> {
    spec.validate()?;
    let m = spec.order;
    let weighted_sum = summability_certificate(&spec.a_env, &spec.a, m, spec.alpha)?;
    let weighted_bound = match weighted_sum.upper_bound() {
        ExtendedNorm::Finite(v) => ExtendedNorm::Finite(spec.bound * v),
        ExtendedNorm::Infinite => {
            return Err(Error::NonSummable {
                weight: weighted_sum.exponent,
                envelope: spec.a_env.to_string(),
            })
        }
    };
    let mut outcomes = Vec::new();
    let limit = spec.margin * (1.0 + MARGIN_SLACK);
    outcomes.push(CheckOutcome {
        name: checks::WEIGHTED_FORCING,
        passed: weighted_bound <= ExtendedNorm::Finite(limit),
        detail: format!(
            "M * sum n^{} |a_n| <= {} against margin {}",
            weighted_sum.exponent, weighted_bound, spec.margin
        ),
    });

    let interior = interior_of(spec.domain, spec.margin);
    let escape = spec.y.indices().zip(spec.y.values()).find(|(_, v)| !interior.contains(**v));
    outcomes.push(CheckOutcome {
        name: checks::INTERIOR,
        passed: escape.is_none(),
        detail: match escape {
            None => format!("all y_n inside {interior}"),
            Some((n, v)) => format!("y_{n} = {v} outside {interior}"),
        },
    });

    let dy = forward_difference(&spec.y, m as usize)?;
    let approximant_deviation = dy
        .values()
        .iter()
        .zip(spec.b.values())
        .map(|(d, b)| (d - b).abs())
        .fold(0.0, f64::max);
    let scale = spec.y.values().iter().chain(spec.b.values()).fold(1.0f64, |acc, v| acc.max(v.abs()));
    let approximant_tol = APPROXIMANT_TOL * scale * 2f64.powi(m as i32);
    outcomes.push(CheckOutcome {
        name: checks::APPROXIMANT,
        passed: approximant_deviation <= approximant_tol,
        detail: format!("max |Delta^{m} y - b| = {approximant_deviation:e} (tolerance {approximant_tol:e})"),
    });

    let f = &spec.f;
    let (f_samples, f_max_sampled, worst) = sample_f_bound(
        spec.y.indices().map(|n| n as f64).zip(spec.y.values().iter().copied()),
        spec.margin,
        spec.domain,
        |n, t| f(n as u64, t),
    );
    outcomes.push(CheckOutcome {
        name: checks::F_BOUND,
        passed: f_max_sampled <= spec.bound * (1.0 + F_BOUND_SLACK),
        detail: match worst {
            Some((n, t)) => format!("max |f| sampled = {f_max_sampled} at (n = {n}, t = {t}) over {f_samples} points; M = {}", spec.bound),
            None => format!("no samples inside U; M = {}", spec.bound),
        },
    });

    let contraction_estimate = match spec.lipschitz {
        Some(l) => {
            let base = summability_certificate(&spec.a_env, &spec.a, m, 0.0)?;
            base.upper_bound().value().map(|s| l * s)
        }
        None => None,
    };

    Ok(HypothesisReport {
        weighted_sum,
        weighted_bound,
        margin: spec.margin,
        interior,
        approximant_deviation,
        f_samples,
        f_max_sampled,
        contraction_estimate,
        checks: outcomes,
    })
}

/// Bound on what truncating `r^m (a f(., x))` at the window end leaves out.
pub fn truncation_bound(spec: &DifferenceEquationSpec) -> Result<f64> {
    spec.forcing_envelope().sum_tail(spec.order as f64 - 1.0, spec.end() + 1)
}

/// `A x = y + (-1)^m r^m xbar`, `xbar_n = a_n f(n, x_n)`, on the window.
pub fn apply_a(spec: &DifferenceEquationSpec, x: &SequenceWindow) -> Result<SequenceWindow> {
    spec.y.check_same_shape(x)?;
    if let Some((n, v)) = x.indices().zip(x.values()).find(|(_, v)| !spec.domain.contains(**v)) {
        return Err(Error::DomainViolation {
            at: n as f64,
            value: *v,
            domain: spec.domain.to_string(),
        });
    }
    let p = spec.start();
    let (a, xv, f) = (spec.a.values(), x.values(), &spec.f);
    let forcing = spec.execution.map(x.len(), |i| a[i] * f(p + i as u64, xv[i]));
    let input = RemainderInput::new(SequenceWindow::new(p, forcing)?, spec.forcing_envelope(), spec.order)?;
    let r = rm_window(&input, p, spec.end())?.values;
    let sign = spec.sign();
    SequenceWindow::new(
        p,
        spec.y.values().iter().zip(r.values()).map(|(y, r)| y + sign * r).collect(),
    )
}

/// `max |Delta^m x_n - a_n f(n, x_n) - b_n|` over `[n1, n2]`.
pub fn residual(spec: &DifferenceEquationSpec, x: &SequenceWindow, n1: u64, n2: u64) -> Result<f64> {
    spec.y.check_same_shape(x)?;
    let m = spec.order as u64;
    if n1 < x.start() || n2 < n1 || n2 + m > x.end() {
        return Err(Error::InsufficientData(format!(
            "residual on [{n1}, {n2}] needs x up to {} but window is [{}, {}]",
            n2 + m,
            x.start(),
            x.end()
        )));
    }
    let dx = forward_difference(&x.slice(n1, n2 + m)?, m as usize)?;
    let mut worst = 0.0f64;
    for (n, d) in (n1..=n2).zip(dx.values()) {
        let r = d - spec.a.get(n)? * (spec.f)(n, x.get(n)?) - spec.b.get(n)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `(n, |x_n - y_n| * n^(-alpha))` at each checkpoint.
pub fn asymptotic_deviation(
    x: &SequenceWindow,
    y: &SequenceWindow,
    alpha: f64,
    checkpoints: &[u64],
) -> Result<Vec<(u64, f64)>> {
    x.check_same_shape(y)?;
    checkpoints
        .iter()
        .map(|&n| Ok((n, (x.get(n)? - y.get(n)?).abs() * (n as f64).powf(-alpha))))
        .collect()
}

/// `p` followed by the powers of two inside `[p, end]`.
pub fn default_checkpoints(p: u64, end: u64) -> Vec<u64> {
    let mut out = vec![p];
    let mut n = 1u64;
    while n <= end {
        if n > p {
            out.push(n);
        }
        n = match n.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub x: SequenceWindow,
    pub iterations: usize,
    /// Sup-metric gap between successive iterates.
    pub trace: Vec<f64>,
    pub residual_max: f64,
    pub deviation_profile: Vec<(u64, f64)>,
    pub status: SolveStatus,
    pub truncation_bound: f64,
    pub hypotheses: HypothesisReport,
}

/// Picard iteration of `A` from `x_0 = y`.
pub fn solve(spec: &DifferenceEquationSpec, opts: &SolveOptions) -> Result<SolveResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("tol must be positive, got {}", opts.tol)));
    }
    let hypotheses = check_hypotheses(spec)?;
    let truncation_bound = truncation_bound(spec)?;
    let mut x = spec.y.clone();
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    if !hypotheses.passed() {
        status = SolveStatus::HypothesisFailed;
    } else {
        for _ in 0..opts.max_iter {
            let next = apply_a(spec, &x)?;
            let gap = sup_metric(&next, &x)?.value().unwrap_or(f64::INFINITY);
            trace.push(gap);
            x = next;
            if gap < opts.tol {
                status = SolveStatus::Converged;
                break;
            }
        }
    }
    let residual_max = residual(spec, &x, spec.start(), spec.end() - spec.order as u64)?;
    let deviation_profile = asymptotic_deviation(&x, &spec.y, spec.alpha, &default_checkpoints(spec.start(), spec.end()))?;
    Ok(SolveResult {
        x,
        iterations: trace.len(),
        trace,
        residual_max,
        deviation_profile,
        status,
        truncation_bound,
        hypotheses,
    })
}
