//! The operator identity suite: inversion, derivative ladders, the
//! exponential eigen-identity and the order swap of iterated integrals.

use serde::Serialize;

use crate::cli::config::{Controls, IdentitySuiteConfig};
use crate::envelope::DecayEnvelope;
use crate::error::Result;
use crate::quadrature::QuadratureConfig;
use crate::remainder::continuous::{derivative_identity_check, fubini_check, rm_cont, EnvelopedFn};
use crate::remainder::discrete::{check_difference_identity, RemainderInput};
use crate::sequences::SequenceWindow;

pub const DISCRETE_INVERSION_TOL: f64 = 1e-10;
pub const DISCRETE_LADDER_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-8;
pub const CONTINUOUS_DERIVATIVE_TOL: f64 = 1e-5;
pub const ORDER_SWAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub check: &'static str,
    pub case: String,
    pub max_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn row(check: &'static str, case: String, max_deviation: f64, threshold: f64) -> IdentityRow {
    IdentityRow {
        check,
        case,
        max_deviation,
        threshold,
        passed: max_deviation < threshold,
    }
}

pub fn run_suite(cfg: &IdentitySuiteConfig, controls: &Controls) -> Result<Vec<IdentityRow>> {
    let mut rows = Vec::new();
    let end = controls.window;
    let discrete: [(&str, SequenceWindow, DecayEnvelope); 2] = [
        ("x=2^-j", SequenceWindow::from_fn(1, end, |j| 0.5f64.powi(j as i32))?, DecayEnvelope::geometric(1.0, 0.5)?),
        ("x=j^-5", SequenceWindow::from_fn(1, end, |j| (j as f64).powi(-5))?, DecayEnvelope::power(1.0, 5.0)?),
    ];
    for (label, x, env) in &discrete {
        for m in 1..=cfg.max_order {
            let input = RemainderInput::new(x.clone(), *env, m)?;
            for k in 1..=m {
                let dev = check_difference_identity(&input, k, 1, cfg.range_end)?;
                let case = format!("{label} m={m} k={k}");
                rows.push(if k == m {
                    row("discrete-inversion", case, dev, DISCRETE_INVERSION_TOL)
                } else {
                    row("discrete-ladder", case, dev, DISCRETE_LADDER_TOL)
                });
            }
        }
    }

    let q = QuadratureConfig::with_abs_tol(controls.quad_abs_tol);
    let exp = EnvelopedFn::from_fn(|s: f64| (-s).exp(), DecayEnvelope::exponential(1.0, 1.0)?, 0.0, controls.t_end)?;
    for m in 1..=cfg.max_order_continuous {
        let eigen = cfg
            .points
            .iter()
            .map(|&t| rm_cont(&exp, m, t, &q).map(|b| (b.value - (-t).exp()).abs()))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row("continuous-eigen", format!("f=exp(-s) m={m}"), eigen.into_iter().fold(0.0, f64::max), EIGEN_TOL));
        for k in 1..=m {
            let mut dev = 0.0f64;
            for &t in &cfg.points {
                dev = dev.max(derivative_identity_check(&exp, m, k, t, controls.step, &q)?);
            }
            let check = if k == m { "continuous-inversion" } else { "continuous-ladder" };
            rows.push(row(check, format!("f=exp(-s) m={m} k={k} h={}", controls.step), dev, CONTINUOUS_DERIVATIVE_TOL));
        }
    }

    let integrands: [(&str, fn(f64) -> f64); 4] = [
        ("f=1", |_| 1.0),
        ("f=s", |s| s),
        ("f=s^2", |s| s * s),
        ("f=exp(-s)", |s| (-s).exp()),
    ];
    for (label, f) in integrands {
        for m in 0..cfg.max_order_continuous {
            let mut dev = 0.0f64;
            for &(a, b) in &cfg.intervals {
                dev = dev.max(fubini_check(&f, a, b, m, &q)?);
            }
            rows.push(row("order-swap", format!("{label} m={m}"), dev, ORDER_SWAP_TOL));
        }
    }
    Ok(rows)
}
