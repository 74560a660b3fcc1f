//! Continuous iterated remainder
//! `(r^m f)(t) = int_t^inf (s - t)^(m-1) / (m-1)! f(s) ds`.
//!
//! The integral is split at the horizon `T` of the represented function:
//! adaptive quadrature on `[t, T]`, and the envelope majorant
//! `int_T^inf s^(m-1) env(s) ds` for the rest.

use std::cell::RefCell;
use std::sync::Arc;

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interp::Pchip;
use crate::quadrature::{integrate, integrate_many, QuadratureConfig};
use crate::remainder::{Bracket, SummabilityReport, Verdict};
use crate::sequences::{sup_distance, ExtendedNorm};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on `[start, inf)` known exactly on `[start, horizon]` and through
/// its decay envelope beyond.
pub trait TailFunction: Sync {
    fn eval(&self, s: f64) -> f64;
    fn start(&self) -> f64;
    fn horizon(&self) -> f64;
    /// Decay envelope past the horizon, if one was declared.
    fn envelope(&self) -> Option<&DecayEnvelope>;
}

fn declared(f: &dyn TailFunction) -> Result<&DecayEnvelope> {
    f.envelope()
        .ok_or_else(|| Error::Invalid("no decay envelope declared past the horizon".into()))
}

/// Callback plus envelope, represented exactly up to `horizon`.
#[derive(Clone)]
pub struct EnvelopedFn {
    f: ScalarFn,
    env: DecayEnvelope,
    start: f64,
    horizon: f64,
}

impl std::fmt::Debug for EnvelopedFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvelopedFn")
            .field("env", &self.env)
            .field("start", &self.start)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl EnvelopedFn {
    pub fn new(f: ScalarFn, env: DecayEnvelope, start: f64, horizon: f64) -> Result<Self> {
        env.validate()?;
        if !(start >= 0.0 && horizon > start && horizon.is_finite()) {
            return Err(Error::Invalid(format!("need 0 <= start < horizon, got [{start}, {horizon}]")));
        }
        Ok(EnvelopedFn { f, env, start, horizon })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, env: DecayEnvelope, start: f64, horizon: f64) -> Result<Self> {
        Self::new(Arc::new(f), env, start, horizon)
    }

    pub fn function(&self) -> &ScalarFn {
        &self.f
    }
}

impl TailFunction for EnvelopedFn {
    fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn start(&self) -> f64 {
        self.start
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn envelope(&self) -> Option<&DecayEnvelope> {
        Some(&self.env)
    }
}

/// Values on a strictly increasing grid starting at `t0`, interpolated by
/// monotone cubics, optionally with an envelope for `s >= grid end`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    interp: Pchip,
    env: Option<DecayEnvelope>,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, env: Option<DecayEnvelope>) -> Result<Self> {
        if grid.first().is_some_and(|&t0| !(t0 >= 0.0)) {
            return Err(Error::Invalid("grid must start at t0 >= 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid values must be finite".into()));
        }
        if let Some(env) = &env {
            env.validate()?;
        }
        Ok(GridFunction {
            interp: Pchip::new(grid, values)?,
            env,
        })
    }

    pub fn sample(grid: &[f64], f: impl Fn(f64) -> f64, env: Option<DecayEnvelope>) -> Result<Self> {
        Self::new(grid.to_vec(), grid.iter().map(|&t| f(t)).collect(), env)
    }

    pub fn t0(&self) -> f64 {
        self.interp.knots()[0]
    }

    pub fn grid(&self) -> &[f64] {
        self.interp.knots()
    }

    pub fn values(&self) -> &[f64] {
        self.interp.values()
    }

    /// Sup distance over the shared grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<ExtendedNorm> {
        if self.grid() != other.grid() {
            return Err(Error::Shape("grid functions live on different grids".into()));
        }
        sup_distance(self.values(), other.values())
    }
}

impl TailFunction for GridFunction {
    fn eval(&self, s: f64) -> f64 {
        self.interp.eval(s)
    }
    fn start(&self) -> f64 {
        self.t0()
    }
    fn horizon(&self) -> f64 {
        *self.grid().last().unwrap()
    }
    fn envelope(&self) -> Option<&DecayEnvelope> {
        self.env.as_ref()
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `r^m f (t)` with a certified error bound. Order 0 is the identity.
pub fn rm_cont(f: &dyn TailFunction, order: u32, t: f64, q: &QuadratureConfig) -> Result<Bracket> {
    if t < f.start() {
        return Err(Error::Invalid(format!("t = {t} lies before the domain start {}", f.start())));
    }
    if order == 0 {
        return Ok(Bracket {
            value: f.eval(t),
            error_bound: 0.0,
        });
    }
    let weight = order as f64 - 1.0;
    let horizon = f.horizon();
    if t >= horizon {
        // nothing stored past t: only the envelope speaks
        let tail = declared(f)?.integral_tail(weight, t)?;
        return Ok(Bracket {
            value: 0.0,
            error_bound: tail,
        });
    }
    let tail = declared(f)?.integral_tail(weight, horizon)?;
    let norm = factorial(order - 1);
    let k = order as i32 - 1;
    // substitute s = t + u so the kernel is anchored at the lower limit
    let r = integrate(|u| u.powi(k) / norm * f.eval(t + u), 0.0, horizon - t, q)?;
    Ok(Bracket {
        value: r.value,
        error_bound: r.error + tail,
    })
}

/// `r^m f` at every point of `grid` from one table of panel moments.
///
/// Panel moments `int_{t_j}^{t_{j+1}} (s - t_j)^k / k! f(s) ds` are combined by
/// the binomial shift `(s - t_i)^(m-1)/(m-1)! = sum_k (s - t_j)^k/k! (t_j - t_i)^(m-1-k)/(m-1-k)!`,
/// in which every term is nonnegative for `t_i <= t_j <= s`.
pub fn rm_cont_on_grid(
    f: &dyn TailFunction,
    order: u32,
    grid: &[f64],
    q: &QuadratureConfig,
    exec: Execution,
) -> Result<Vec<Bracket>> {
    if order == 0 {
        return Ok(grid.iter().map(|&t| Bracket { value: f.eval(t), error_bound: 0.0 }).collect());
    }
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("grid must be strictly increasing".into()));
    }
    let horizon = f.horizon();
    if grid[0] < f.start() || *grid.last().unwrap() > horizon {
        return Err(Error::Invalid(format!(
            "grid [{}, {}] not inside represented range [{}, {horizon}]",
            grid[0],
            grid.last().unwrap(),
            f.start()
        )));
    }
    let tail = declared(f)?.integral_tail(order as f64 - 1.0, horizon)?;
    let mut knots = grid.to_vec();
    if *knots.last().unwrap() < horizon {
        knots.push(horizon);
    }
    let panels = knots.len() - 1;
    let dim = order as usize;
    let panel_cfg = QuadratureConfig {
        abs_tol: q.abs_tol / panels.max(1) as f64,
        ..*q
    };
    let inv_fact: Vec<f64> = (0..order).map(|k| 1.0 / factorial(k)).collect();
    let moments = exec.try_map(panels, |j| {
        let a = knots[j];
        integrate_many(
            |s, out| {
                let fs = f.eval(s);
                let u = s - a;
                let mut p = 1.0;
                for (k, o) in out.iter_mut().enumerate() {
                    *o = p * inv_fact[k] * fs;
                    p *= u;
                }
            },
            dim,
            a,
            knots[j + 1],
            &panel_cfg,
        )
    })?;
    let values = exec.map(grid.len(), |i| {
        let ti = knots[i];
        let mut value = 0.0;
        let mut error = 0.0;
        for j in (i..panels).rev() {
            let d = knots[j] - ti;
            // weights (t_j - t_i)^(m-1-k) / (m-1-k)!
            for (k, mom) in moments[j].iter().enumerate() {
                let e = order as usize - 1 - k;
                let w = d.powi(e as i32) * inv_fact[e];
                value += w * mom.value;
                error += w * mom.error;
            }
        }
        Bracket {
            value,
            error_bound: error + tail,
        }
    });
    Ok(values)
}

/// `|LHS - RHS|` for the order swap
/// `int_a^b int_t^b (s-t)^m/m! f(s) ds dt = int_a^b (s-a)^(m+1)/(m+1)! f(s) ds`,
/// each side by its own quadrature.
pub fn fubini_check(f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: u32, q: &QuadratureConfig) -> Result<f64> {
    if !(b > a) {
        return Err(Error::Invalid(format!("need a < b, got [{a}, {b}]")));
    }
    let inner_cfg = QuadratureConfig {
        abs_tol: q.abs_tol * 1e-2,
        ..*q
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let nm = factorial(m);
    let lhs = integrate(
        |t| match integrate(|s| (s - t).powi(m as i32) / nm * f(s), t, b, &inner_cfg) {
            Ok(r) => r.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        q,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let nm1 = factorial(m + 1);
    let rhs = integrate(|s| (s - a).powi(m as i32 + 1) / nm1 * f(s), a, b, q)?;
    Ok((lhs.value - rhs.value).abs())
}

/// Default central-difference step `1e-3 * max(1, t)`.
pub fn default_step(t: f64) -> f64 {
    1e-3 * t.max(1.0)
}

/// Deviation between the k-th central difference of `t -> r^m f(t)` and
/// `(-1)^k r^(m-k) f(t)`.
pub fn derivative_identity_check(
    f: &dyn TailFunction,
    order: u32,
    k: u32,
    t: f64,
    h: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if k > order {
        return Err(Error::Invalid(format!("k = {k} exceeds order {order}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    let reach = 0.5 * k as f64 * h;
    if t - reach < f.start() || t + reach >= f.horizon() {
        return Err(Error::InsufficientData(format!(
            "stencil [{}, {}] leaves the represented range",
            t - reach,
            t + reach
        )));
    }
    let mut diff = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let tau = t + (0.5 * k as f64 - i as f64) * h;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        diff += sign * binom * rm_cont(f, order, tau, q)?.value;
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    diff /= h.powi(k as i32);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = rm_cont(f, order - k, t, q)?.value;
    Ok((diff - sign * rhs).abs())
}

/// Certifies `int_{t0}^inf s^(m-1-alpha) env(s) ds < inf` from the envelope alone.
pub fn integrability_certificate(env: &DecayEnvelope, t0: f64, order: u32, alpha: f64) -> Result<SummabilityReport> {
    let exponent = check_exponent(order, alpha)?;
    Ok(match env.integral_tail(exponent, t0) {
        Ok(tail) => certified(exponent, 0.0, tail),
        Err(Error::NonIntegrable { .. }) => divergent(exponent, 0.0),
        Err(e) => return Err(e),
    })
}

/// Same, using the represented values on `[start, horizon]` and the envelope past it.
pub fn integrability_certificate_for(
    f: &dyn TailFunction,
    order: u32,
    alpha: f64,
    q: &QuadratureConfig,
) -> Result<SummabilityReport> {
    let exponent = check_exponent(order, alpha)?;
    let body = integrate(|s| s.powf(exponent) * f.eval(s).abs(), f.start(), f.horizon(), q)?;
    Ok(match declared(f)?.integral_tail(exponent, f.horizon()) {
        Ok(tail) => certified(exponent, body.value, body.error + tail),
        Err(Error::NonIntegrable { .. }) => divergent(exponent, body.value),
        Err(e) => return Err(e),
    })
}

fn check_exponent(order: u32, alpha: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::Invalid("order must be >= 1".into()));
    }
    if alpha > 0.0 {
        return Err(Error::Invalid(format!("alpha must be <= 0, got {alpha}")));
    }
    Ok(order as f64 - 1.0 - alpha)
}

fn certified(exponent: f64, partial: f64, tail: f64) -> SummabilityReport {
    SummabilityReport {
        exponent,
        partial,
        tail_bound: ExtendedNorm::finite(tail),
        verdict: Verdict::CertifiedFinite,
    }
}

fn divergent(exponent: f64, partial: f64) -> SummabilityReport {
    SummabilityReport {
        exponent,
        partial,
        tail_bound: ExtendedNorm::Infinite,
        verdict: Verdict::DivergentEnvelope,
    }
}
