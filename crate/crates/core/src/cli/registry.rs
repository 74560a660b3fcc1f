//! Named coefficient families and nonlinearities usable from configs.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::sequences::Interval;

/// Coefficient / forcing / approximant families, evaluated at `n` or `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `c * q^s`
    Geometric { c: f64, q: f64 },
    /// `c * s^(-beta)`
    Power { c: f64, beta: f64 },
    /// `c * exp(-rate * s)`
    Exp { c: f64, rate: f64 },
    Zero,
    Constant { c: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{what} must be finite, got {v}")))
            }
        };
        match *self {
            Family::Geometric { c, q } => {
                finite(c, "c")?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::Invalid(format!("geometric q must lie in (0, 1), got {q}")));
                }
            }
            Family::Power { c, beta } => {
                finite(c, "c")?;
                finite(beta, "beta")?;
            }
            Family::Exp { c, rate } => {
                finite(c, "c")?;
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::Invalid(format!("exp rate must be positive, got {rate}")));
                }
            }
            Family::Zero => {}
            Family::Constant { c } => finite(c, "c")?,
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Family::Geometric { c, q } => c * q.powf(s),
            Family::Power { c, beta } => c * s.powf(-beta),
            Family::Exp { c, rate } => c * (-rate * s).exp(),
            Family::Zero => 0.0,
            Family::Constant { c } => c,
        }
    }

    /// Pointwise bound on `|family(s)|` for large `s`.
    pub fn envelope(&self) -> Result<DecayEnvelope> {
        match *self {
            Family::Geometric { c, q } => DecayEnvelope::geometric(c.abs(), q),
            Family::Power { c, beta } => DecayEnvelope::power(c.abs(), beta),
            Family::Exp { c, rate } => DecayEnvelope::exponential(c.abs(), rate),
            Family::Zero => Ok(DecayEnvelope::zero()),
            Family::Constant { c } => DecayEnvelope::power(c.abs(), 0.0),
        }
    }

    pub fn function(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        let fam = *self;
        Arc::new(move |s| fam.eval(s))
    }

    pub fn is_singular_at_zero(&self) -> bool {
        matches!(*self, Family::Power { c, beta } if c != 0.0 && beta > 0.0)
    }
}

/// Nonlinearities `f(., x)`; none depend on the first argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity {
    Constant { c: f64 },
    Sin,
    Atan,
    /// `1 / (1 + exp(-k x))`
    Logistic { k: f64 },
    /// `sum_i coeffs[i] x^i`
    Poly { coeffs: Vec<f64> },
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Constant { c } if !c.is_finite() => Err(Error::Invalid(format!("constant c must be finite, got {c}"))),
            Nonlinearity::Logistic { k } if !k.is_finite() => Err(Error::Invalid(format!("logistic k must be finite, got {k}"))),
            Nonlinearity::Poly { coeffs } if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::Invalid("poly needs a non-empty list of finite coefficients".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Constant { c } => *c,
            Nonlinearity::Sin => x.sin(),
            Nonlinearity::Atan => x.atan(),
            Nonlinearity::Logistic { k } => 1.0 / (1.0 + (-k * x).exp()),
            Nonlinearity::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    fn radius(domain: Interval) -> Option<f64> {
        domain.is_bounded().then(|| domain.lo.abs().max(domain.hi.abs()))
    }

    /// `sup |f|` over `domain`, when the family can bound it.
    pub fn bound(&self, domain: Interval) -> Option<f64> {
        match self {
            Nonlinearity::Constant { c } => Some(c.abs()),
            Nonlinearity::Sin | Nonlinearity::Logistic { .. } => Some(1.0),
            Nonlinearity::Atan => Some(FRAC_PI_2),
            Nonlinearity::Poly { coeffs } => {
                let r = Self::radius(domain)?;
                Some(coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.abs()))
            }
        }
    }

    /// Lipschitz constant in `x` over `domain`, when known.
    pub fn lipschitz(&self, domain: Interval) -> Option<f64> {
        match self {
            Nonlinearity::Constant { .. } => Some(0.0),
            Nonlinearity::Sin | Nonlinearity::Atan => Some(1.0),
            Nonlinearity::Logistic { k } => Some(k.abs() / 4.0),
            Nonlinearity::Poly { coeffs } => {
                let r = Self::radius(domain)?;
                Some(
                    coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(0.0, |acc, (i, c)| acc * r + i as f64 * c.abs()),
                )
            }
        }
    }
}

/// One registry entry: name, parameters, JSON example and the declared bounds.
pub struct Entry {
    pub kind: &'static str,
    pub name: &'static str,
    pub params: &'static str,
    pub example: &'static str,
    pub note: &'static str,
}

pub const ENTRIES: &[Entry] = &[
    Entry { kind: "family", name: "geometric", params: "c, q", example: r#"{"family": "geometric", "c": 1.0, "q": 0.5}"#, note: "c * q^s, envelope geometric(|c|, q)" },
    Entry { kind: "family", name: "power", params: "c, beta", example: r#"{"family": "power", "c": 1.0, "beta": 2.0}"#, note: "c * s^-beta, envelope power(|c|, beta)" },
    Entry { kind: "family", name: "exp", params: "c, rate", example: r#"{"family": "exp", "c": 0.25, "rate": 1.0}"#, note: "c * exp(-rate s), envelope geometric(|c|, exp(-rate))" },
    Entry { kind: "family", name: "zero", params: "", example: r#"{"family": "zero"}"#, note: "0, envelope zero" },
    Entry { kind: "family", name: "constant", params: "c", example: r#"{"family": "constant", "c": 0.5}"#, note: "c, envelope power(|c|, 0)" },
    Entry { kind: "nonlinearity", name: "constant", params: "c", example: r#"{"name": "constant", "c": 1.0}"#, note: "f = c; M = |c|, L = 0" },
    Entry { kind: "nonlinearity", name: "sin", params: "", example: r#"{"name": "sin"}"#, note: "f = sin x; M = 1, L = 1" },
    Entry { kind: "nonlinearity", name: "atan", params: "", example: r#"{"name": "atan"}"#, note: "f = atan x; M = pi/2, L = 1" },
    Entry { kind: "nonlinearity", name: "logistic", params: "k", example: r#"{"name": "logistic", "k": 2.0}"#, note: "f = 1/(1+exp(-k x)); M = 1, L = |k|/4" },
    Entry { kind: "nonlinearity", name: "poly", params: "coeffs", example: r#"{"name": "poly", "coeffs": [0.0, 1.0, -0.5]}"#, note: "f = sum c_i x^i; M, L from the radius of a bounded U" },
];

/// Deterministic text listing of the registry.
pub fn list_registry() -> String {
    let mut out = String::new();
    for kind in ["family", "nonlinearity"] {
        out.push_str(match kind {
            "family" => "coefficient families (a, b, y):\n",
            _ => "nonlinearities (f):\n",
        });
        for e in ENTRIES.iter().filter(|e| e.kind == kind) {
            out.push_str(&format!("  {:<10} ({:<7}) {}\n", e.name, e.params, e.note));
            out.push_str(&format!("  {:<10}  example: {}\n", "", e.example));
        }
    }
    out
}
