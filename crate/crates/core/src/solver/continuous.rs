//! Solutions of `x^(m)(t) = a(t) f(t, x(t)) + b(t)` with `x = y + o(t^alpha)`,
//! computed on a grid whose steps grow geometrically.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature::QuadratureConfig;
use crate::remainder::continuous::{
    integrability_certificate_for, rm_cont_on_grid, EnvelopedFn, GridFunction, ScalarFn, TailFunction,
};
use crate::remainder::SummabilityReport;
use crate::sequences::{ExtendedNorm, Interval};
use crate::solver::{
    checks, interior_of, sample_f_bound, CheckOutcome, SolveOptions, SolveStatus, F_BOUND_SLACK, MARGIN_SLACK,
};

pub type PlaneFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Relative tolerance for the sampled check `D_h^m y = b`.
pub const APPROXIMANT_FD_TOL: f64 = 1e-4;

/// Grid `t0 < t1 < ... < t_end` with steps `first_step * (1 + growth)^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub first_step: f64,
    pub growth: f64,
    pub t_end: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            first_step: 1e-3,
            growth: 0.0025,
            t_end: 40.0,
        }
    }
}

impl GridConfig {
    /// `t_i = t0 (1 + growth)^i`, which needs `t0 > 0`.
    pub fn geometric(t0: f64, growth: f64, t_end: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::Invalid("a purely geometric grid needs t0 > 0".into()));
        }
        Ok(GridConfig {
            first_step: t0 * growth,
            growth,
            t_end,
        })
    }

    pub fn build(&self, t0: f64) -> Result<Vec<f64>> {
        if !(self.first_step > 0.0 && self.growth >= 0.0 && self.t_end > t0 && self.t_end.is_finite()) {
            return Err(Error::Invalid(format!(
                "grid needs first_step > 0, growth >= 0 and t_end > t0 = {t0}, got {self:?}"
            )));
        }
        let mut grid = vec![t0];
        let mut step = self.first_step;
        let mut t = t0;
        while t + 1.5 * step < self.t_end {
            t += step;
            grid.push(t);
            step *= 1.0 + self.growth;
            if grid.len() > 10_000_000 {
                return Err(Error::Invalid("grid would exceed 10^7 points".into()));
            }
        }
        grid.push(self.t_end);
        Ok(grid)
    }
}

#[derive(Clone)]
pub struct OdeSpec {
    pub order: u32,
    pub t0: f64,
    pub a: ScalarFn,
    pub a_env: DecayEnvelope,
    pub b: ScalarFn,
    pub f: PlaneFn,
    pub bound: f64,
    pub domain: Interval,
    pub margin: f64,
    pub alpha: f64,
    /// Approximate solution with `y^(m) = b`.
    pub y: ScalarFn,
    pub quadrature: QuadratureConfig,
    pub grid: GridConfig,
    pub lipschitz: Option<f64>,
    pub execution: Execution,
}

impl std::fmt::Debug for OdeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeSpec")
            .field("order", &self.order)
            .field("t0", &self.t0)
            .field("bound", &self.bound)
            .field("domain", &self.domain)
            .field("margin", &self.margin)
            .field("alpha", &self.alpha)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl OdeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Invalid("order m must be >= 1".into()));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(Error::Invalid(format!("t0 must be >= 0, got {}", self.t0)));
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
        self.quadrature.validate()?;
        self.a_env.validate()?;
        self.grid.build(self.t0).map(|_| ())
    }

    fn sign(&self) -> f64 {
        if self.order % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn coefficient(&self) -> Result<EnvelopedFn> {
        EnvelopedFn::new(self.a.clone(), self.a_env, self.t0, self.grid.t_end)
    }
}

/// `t -> a(t) f(t, x(t))` with envelope `M * env(a)`.
struct Forcing<'a> {
    spec: &'a OdeSpec,
    x: &'a GridFunction,
    env: DecayEnvelope,
}

impl TailFunction for Forcing<'_> {
    fn eval(&self, s: f64) -> f64 {
        (self.spec.a)(s) * (self.spec.f)(s, self.x.eval(s))
    }
    fn start(&self) -> f64 {
        self.x.t0()
    }
    fn horizon(&self) -> f64 {
        self.x.horizon()
    }
    fn envelope(&self) -> Option<&DecayEnvelope> {
        Some(&self.env)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeHypothesisReport {
    /// `int_{t0}^inf s^(m-1-alpha) |a(s)| ds`.
    pub weighted_integral: SummabilityReport,
    pub weighted_bound: ExtendedNorm,
    pub margin: f64,
    pub interior: Interval,
    pub approximant_deviation: f64,
    pub f_samples: usize,
    pub f_max_sampled: f64,
    /// Slope bound for every iterate: `M sup|a|` for `m = 1`, else
    /// `M int_{t0}^inf s^(m-2) |a(s)| ds` (computed, not inferred from the margin).
    pub iterate_slope_bound: f64,
    pub contraction_estimate: Option<f64>,
    pub checks: Vec<CheckOutcome>,
}

impl OdeHypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

/// `m`-th central difference of `g` at `t` with step `h`.
fn central_difference(g: impl Fn(f64) -> f64, m: u32, t: f64, h: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=m {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * g(t + (0.5 * m as f64 - i as f64) * h);
        binom = binom * (m - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(m as i32)
}

fn stencil_fits(t: f64, m: u32, h: f64, lo: f64, hi: f64) -> bool {
    let reach = 0.5 * m as f64 * h;
    t - reach >= lo && t + reach <= hi
}

pub fn check_hypotheses_ode(spec: &OdeSpec) -> Result<OdeHypothesisReport> {
    spec.validate()?;
    let m = spec.order;
    let grid = spec.grid.build(spec.t0)?;
    let a_fn = spec.coefficient()?;
    let q = &spec.quadrature;

    let weighted_integral = integrability_certificate_for(&a_fn, m, spec.alpha, q)?;
    let weighted_bound = match weighted_integral.upper_bound() {
        ExtendedNorm::Finite(v) => ExtendedNorm::Finite(spec.bound * v),
        ExtendedNorm::Infinite => {
            return Err(Error::NonIntegrable {
                weight: weighted_integral.exponent,
                envelope: spec.a_env.to_string(),
            })
        }
    };
    let mut outcomes = vec![CheckOutcome {
        name: checks::WEIGHTED_FORCING,
        passed: weighted_bound <= ExtendedNorm::Finite(spec.margin * (1.0 + MARGIN_SLACK)),
        detail: format!(
            "M * int s^{} |a(s)| ds <= {} against margin {}",
            weighted_integral.exponent, weighted_bound, spec.margin
        ),
    }];

    let interior = interior_of(spec.domain, spec.margin);
    let ys: Vec<f64> = grid.iter().map(|&t| (spec.y)(t)).collect();
    let escape = grid.iter().zip(&ys).find(|(_, v)| !interior.contains(**v));
    outcomes.push(CheckOutcome {
        name: checks::INTERIOR,
        passed: escape.is_none(),
        detail: match escape {
            None => format!("y inside {interior} at all {} grid points", grid.len()),
            Some((t, v)) => format!("y({t}) = {v} outside {interior}"),
        },
    });

    let stride = (grid.len() / 200).max(1);
    let mut approximant_deviation = 0.0f64;
    let mut scale = 1.0f64;
    for &t in grid.iter().step_by(stride) {
        let h = crate::remainder::continuous::default_step(t);
        if !stencil_fits(t, m, h, spec.t0, f64::INFINITY) {
            continue;
        }
        let bt = (spec.b)(t);
        let d = central_difference(|s| (spec.y)(s), m, t, h) - bt;
        approximant_deviation = approximant_deviation.max(d.abs());
        scale = scale.max(bt.abs()).max((spec.y)(t).abs());
    }
    let approximant_tol = APPROXIMANT_FD_TOL * scale;
    outcomes.push(CheckOutcome {
        name: checks::APPROXIMANT,
        passed: approximant_deviation <= approximant_tol,
        detail: format!("max |D_h^{m} y - b| = {approximant_deviation:e} (tolerance {approximant_tol:e})"),
    });

    let f = &spec.f;
    let (f_samples, f_max_sampled, worst) =
        sample_f_bound(grid.iter().copied().zip(ys.iter().copied()), spec.margin, spec.domain, |t, x| f(t, x));
    outcomes.push(CheckOutcome {
        name: checks::F_BOUND,
        passed: f_max_sampled <= spec.bound * (1.0 + F_BOUND_SLACK),
        detail: match worst {
            Some((t, x)) => format!("max |f| sampled = {f_max_sampled} at (t = {t}, x = {x}) over {f_samples} points; M = {}", spec.bound),
            None => format!("no samples inside U; M = {}", spec.bound),
        },
    });

    let iterate_slope_bound = if m == 1 {
        spec.bound * grid.iter().map(|&t| (spec.a)(t).abs()).fold(0.0, f64::max)
    } else {
        let r = integrability_certificate_for(&a_fn, m - 1, 0.0, q)?;
        spec.bound * r.upper_bound().value().unwrap_or(f64::INFINITY)
    };
    let contraction_estimate = match spec.lipschitz {
        Some(l) => integrability_certificate_for(&a_fn, m, 0.0, q)?
            .upper_bound()
            .value()
            .map(|v| l * v),
        None => None,
    };

    Ok(OdeHypothesisReport {
        weighted_integral,
        weighted_bound,
        margin: spec.margin,
        interior,
        approximant_deviation,
        f_samples,
        f_max_sampled,
        iterate_slope_bound,
        contraction_estimate,
        checks: outcomes,
    })
}

/// `A x` on the grid of `x` together with the largest certified error bound.
pub fn apply_a_ode_bracketed(spec: &OdeSpec, x: &GridFunction) -> Result<(GridFunction, f64)> {
    let grid = x.grid();
    if grid[0] != spec.t0 || *grid.last().unwrap() != spec.grid.t_end {
        return Err(Error::Shape(format!(
            "iterate grid [{}, {}] does not span [{}, {}]",
            grid[0],
            grid.last().unwrap(),
            spec.t0,
            spec.grid.t_end
        )));
    }
    if let Some((t, v)) = grid.iter().zip(x.values()).find(|(_, v)| !spec.domain.contains(**v)) {
        return Err(Error::DomainViolation {
            at: *t,
            value: *v,
            domain: spec.domain.to_string(),
        });
    }
    let forcing = Forcing {
        spec,
        x,
        env: spec.a_env.scaled(spec.bound),
    };
    let r = rm_cont_on_grid(&forcing, spec.order, grid, &spec.quadrature, spec.execution)?;
    let sign = spec.sign();
    let values = grid.iter().zip(&r).map(|(&t, b)| (spec.y)(t) + sign * b.value).collect();
    let err = r.iter().map(|b| b.error_bound).fold(0.0, f64::max);
    Ok((GridFunction::new(grid.to_vec(), values, None)?, err))
}

/// `(A x)(t_i) = y(t_i) + (-1)^m r^m (a f(., x))(t_i)` on the grid of `x`.
pub fn apply_a_ode(spec: &OdeSpec, x: &GridFunction) -> Result<GridFunction> {
    apply_a_ode_bracketed(spec, x).map(|(ax, _)| ax)
}

/// `max |D_h^m x(t) - a(t) f(t, x(t)) - b(t)|` over `samples`. Central
/// differences carry an `O(h^2)` discretization error on top of the true residual.
pub fn residual_ode(spec: &OdeSpec, x: &dyn TailFunction, samples: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    let m = spec.order;
    let mut worst = 0.0f64;
    for &t in samples {
        if !stencil_fits(t, m, h, x.start(), x.horizon()) {
            return Err(Error::InsufficientData(format!(
                "stencil of order {m} and step {h} at t = {t} leaves [{}, {}]",
                x.start(),
                x.horizon()
            )));
        }
        let xt = x.eval(t);
        let r = central_difference(|s| x.eval(s), m, t, h) - (spec.a)(t) * (spec.f)(t, xt) - (spec.b)(t);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Largest difference quotient over consecutive grid points and family members.
pub fn equicontinuity_modulus(xs: &[GridFunction]) -> Result<f64> {
    let Some(first) = xs.first() else {
        return Ok(0.0);
    };
    let grid = first.grid();
    let mut worst = 0.0f64;
    for x in xs {
        if x.grid() != grid {
            return Err(Error::Shape("family members live on different grids".into()));
        }
        for (w, v) in grid.windows(2).zip(x.values().windows(2)) {
            worst = worst.max((v[1] - v[0]).abs() / (w[1] - w[0]));
        }
    }
    Ok(worst)
}

/// `t0` followed by `max(t0, 1) * 2^i` inside the grid.
pub fn default_checkpoints_ode(t0: f64, t_end: f64) -> Vec<f64> {
    let mut out = vec![t0];
    let mut t = t0.max(1.0);
    while t <= t_end {
        if t > t0 {
            out.push(t);
        }
        t *= 2.0;
    }
    out
}

/// `(t, |x(t) - y(t)| * t^(-alpha))` at each checkpoint.
pub fn asymptotic_deviation_ode(x: &dyn TailFunction, y: &dyn Fn(f64) -> f64, alpha: f64, checkpoints: &[f64]) -> Vec<(f64, f64)> {
    checkpoints
        .iter()
        .map(|&t| (t, (x.eval(t) - y(t)).abs() * t.powf(-alpha)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolveResult {
    #[serde(skip)]
    pub x: GridFunction,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub residual_max: f64,
    pub residual_step: f64,
    pub deviation_profile: Vec<(f64, f64)>,
    pub status: SolveStatus,
    /// Largest certified quadrature-plus-tail bound of the last application of `A`.
    pub quadrature_error_bound: f64,
    /// Equicontinuity modulus of all iterates `A x_k`.
    pub iterate_slope_max: f64,
    pub hypotheses: OdeHypothesisReport,
}

/// Picard iteration of `A` on the grid from `x_0 = y`.
pub fn solve_ode(spec: &OdeSpec, opts: &SolveOptions) -> Result<OdeSolveResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("tol must be positive, got {}", opts.tol)));
    }
    let hypotheses = check_hypotheses_ode(spec)?;
    let grid = spec.grid.build(spec.t0)?;
    let mut x = GridFunction::sample(&grid, |t| (spec.y)(t), None)?;
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut quadrature_error_bound = 0.0;
    let mut iterate_slope_max = 0.0f64;
    if !hypotheses.passed() {
        status = SolveStatus::HypothesisFailed;
    } else {
        for _ in 0..opts.max_iter {
            let (next, err) = apply_a_ode_bracketed(spec, &x)?;
            quadrature_error_bound = err;
            iterate_slope_max = iterate_slope_max.max(equicontinuity_modulus(std::slice::from_ref(&next))?);
            let gap = next.sup_distance(&x)?.value().unwrap_or(f64::INFINITY);
            trace.push(gap);
            x = next;
            if gap < opts.tol {
                status = SolveStatus::Converged;
                break;
            }
        }
    }
    let h = opts.residual_step;
    let samples: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| stencil_fits(t, spec.order, h, spec.t0, spec.grid.t_end))
        .collect();
    let residual_max = residual_ode(spec, &x, &samples, h)?;
    let deviation_profile = asymptotic_deviation_ode(
        &x,
        &|t| (spec.y)(t),
        spec.alpha,
        &default_checkpoints_ode(spec.t0, spec.grid.t_end),
    );
    Ok(OdeSolveResult {
        x,
        iterations: trace.len(),
        trace,
        residual_max,
        residual_step: h,
        deviation_profile,
        status,
        quadrature_error_bound,
        iterate_slope_max,
        hypotheses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_spec(margin: f64) -> OdeSpec {
        OdeSpec {
            order: 1,
            t0: 0.0,
            a: Arc::new(|t: f64| (-t).exp()),
            a_env: DecayEnvelope::exponential(1.0, 1.0).unwrap(),
            b: Arc::new(|_| 0.0),
            f: Arc::new(|_, _| 1.0),
            bound: 1.0,
            domain: Interval::real_line(),
            margin,
            alpha: 0.0,
            y: Arc::new(|_| 0.0),
            quadrature: QuadratureConfig::default(),
            grid: GridConfig::default(),
            lipschitz: Some(0.0),
            execution: Execution::Sequential,
        }
    }

    #[test]
    fn grid_is_geometric_and_capped() {
        let g = GridConfig { first_step: 0.1, growth: 0.5, t_end: 2.0 }.build(0.0).unwrap();
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 0.25).abs() < 1e-15);
        assert_eq!(*g.last().unwrap(), 2.0);
        let g = GridConfig::geometric(1.0, 0.1, 3.0).unwrap().build(1.0).unwrap();
        assert!((g[5] - 1.1f64.powi(5)).abs() < 1e-12);
        assert!(GridConfig::geometric(0.0, 0.1, 3.0).is_err());
    }

    #[test]
    fn hypotheses_examples() {
        let r = check_hypotheses_ode(&linear_spec(1.0)).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let r = check_hypotheses_ode(&linear_spec(0.9)).unwrap();
        assert_eq!(r.failures(), vec![checks::WEIGHTED_FORCING]);
        let mut spec = linear_spec(0.5);
        spec.a = Arc::new(|t: f64| 0.25 * (-t).exp());
        spec.a_env = DecayEnvelope::exponential(0.25, 1.0).unwrap();
        spec.domain = Interval::new(-1.0, 1.0);
        spec.y = Arc::new(|_| 0.8);
        let r = check_hypotheses_ode(&spec).unwrap();
        assert_eq!(r.failures(), vec![checks::INTERIOR]);
    }

    #[test]
    fn approximant_must_solve_unforced_equation() {
        let mut spec = linear_spec(1.0);
        spec.y = Arc::new(|t: f64| 0.01 * t.sin());
        let r = check_hypotheses_ode(&spec).unwrap();
        assert!(r.failures().contains(&checks::APPROXIMANT));
    }

    #[test]
    fn apply_a_examples() {
        let spec = linear_spec(1.0);
        let grid = spec.grid.build(0.0).unwrap();
        let y = GridFunction::sample(&grid, |_| 0.0, None).unwrap();
        let ax = apply_a_ode(&spec, &y).unwrap();
        for (t, v) in grid.iter().zip(ax.values()) {
            assert!((v + (-t).exp()).abs() < 1e-12, "t={t}");
        }
        let mut zero = linear_spec(1.0);
        zero.a = Arc::new(|_| 0.0);
        let x = GridFunction::sample(&grid, |t| t.cos(), None).unwrap();
        assert!(apply_a_ode(&zero, &x).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_a_reports_domain_violation() {
        let mut spec = linear_spec(1.0);
        spec.domain = Interval::new(-2.0, 2.0);
        let grid = spec.grid.build(0.0).unwrap();
        let x = GridFunction::sample(&grid, |t| t, None).unwrap();
        assert!(matches!(apply_a_ode(&spec, &x), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn solve_linear_example() {
        let spec = linear_spec(1.0);
        let r = solve_ode(&spec, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.iterations <= 2);
        assert!(r.residual_max < 1e-6, "{}", r.residual_max);
        assert!(r.iterate_slope_max <= 1.0 + 1e-9);
        for (t, v) in r.x.grid().iter().zip(r.x.values()) {
            assert!((v + (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let spec = linear_spec(1.0);
        let exact = EnvelopedFn::from_fn(|t| -(-t).exp(), DecayEnvelope::exponential(1.0, 1.0).unwrap(), 0.0, 40.0).unwrap();
        let samples: Vec<f64> = (1..50).map(|i| i as f64 * 0.2).collect();
        let r1 = residual_ode(&spec, &exact, &samples, 1e-2).unwrap();
        let r2 = residual_ode(&spec, &exact, &samples, 5e-3).unwrap();
        assert!(r1 < 1e-4);
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        let y = EnvelopedFn::from_fn(|_| 0.0, DecayEnvelope::zero(), 0.0, 40.0).unwrap();
        let r = residual_ode(&spec, &y, &samples, 1e-3).unwrap();
        assert!((r - (-0.2f64).exp()).abs() < 1e-15);
        assert!(residual_ode(&spec, &y, &[0.0], 1e-3).is_err());
    }

    #[test]
    fn equicontinuity_examples() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let c = GridFunction::sample(&grid, |_| 3.0, None).unwrap();
        assert_eq!(equicontinuity_modulus(&[c.clone(), c]).unwrap(), 0.0);
        let f1 = GridFunction::sample(&grid, |t| t, None).unwrap();
        let f2 = GridFunction::sample(&grid, |t| 2.0 * t, None).unwrap();
        assert!((equicontinuity_modulus(&[f1, f2]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn checkpoints() {
        assert_eq!(default_checkpoints_ode(0.0, 10.0), vec![0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(default_checkpoints_ode(3.0, 20.0), vec![3.0, 6.0, 12.0]);
    }
}
