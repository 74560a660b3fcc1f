//! Caller-asserted decay envelopes for the unseen tail of a sequence or function.
//!
//! A stored window only covers finitely many indices. The envelope is the
//! promise `|x_j| <= bound(j)` for every `j >= valid_from`, which turns the
//! infinite weighted sums and integrals into certified upper bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvelopeKind {
    /// `c * j^(-beta)`
    Power { c: f64, beta: f64 },
    /// `c * q^j`, `0 < q < 1`
    Geometric { c: f64, q: f64 },
    /// identically zero for `j > last`
    ZeroBeyond { last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    #[serde(flatten)]
    pub kind: EnvelopeKind,
    #[serde(default)]
    pub valid_from: f64,
}

impl fmt::Display for DecayEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EnvelopeKind::Power { c, beta } => write!(f, "power({c}, {beta})")?,
            EnvelopeKind::Geometric { c, q } => write!(f, "geometric({c}, {q})")?,
            EnvelopeKind::ZeroBeyond { last } => write!(f, "zero-beyond({last})")?,
        }
        write!(f, " from {}", self.valid_from)
    }
}

impl DecayEnvelope {
    pub fn new(kind: EnvelopeKind, valid_from: f64) -> Result<Self> {
        let env = DecayEnvelope { kind, valid_from };
        env.validate()?;
        Ok(env)
    }

    pub fn power(c: f64, beta: f64) -> Result<Self> {
        Self::new(EnvelopeKind::Power { c, beta }, 0.0)
    }

    pub fn geometric(c: f64, q: f64) -> Result<Self> {
        Self::new(EnvelopeKind::Geometric { c, q }, 0.0)
    }

    /// `c * exp(-rate * s)`, i.e. geometric with `q = exp(-rate)`.
    pub fn exponential(c: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Invalid(format!("exponential rate must be positive, got {rate}")));
        }
        Self::geometric(c, (-rate).exp())
    }

    pub fn zero_beyond(last: f64) -> Self {
        DecayEnvelope {
            kind: EnvelopeKind::ZeroBeyond { last },
            valid_from: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::zero_beyond(0.0)
    }

    pub fn with_valid_from(mut self, valid_from: f64) -> Self {
        self.valid_from = valid_from;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if !self.valid_from.is_finite() {
            return bad(format!("envelope valid_from must be finite, got {}", self.valid_from));
        }
        match self.kind {
            EnvelopeKind::Power { c, beta } => {
                if !(c >= 0.0 && c.is_finite()) || !beta.is_finite() {
                    return bad(format!("power envelope needs finite c >= 0 and finite beta, got ({c}, {beta})"));
                }
            }
            EnvelopeKind::Geometric { c, q } => {
                if !(c >= 0.0 && c.is_finite()) || !(q > 0.0 && q < 1.0) {
                    return bad(format!("geometric envelope needs c >= 0 and 0 < q < 1, got ({c}, {q})"));
                }
            }
            EnvelopeKind::ZeroBeyond { last } => {
                if !last.is_finite() {
                    return bad(format!("zero-beyond needs a finite cutoff, got {last}"));
                }
            }
        }
        Ok(())
    }

    /// Envelope multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match self.kind {
            EnvelopeKind::Power { c, beta } => EnvelopeKind::Power { c: c * factor, beta },
            EnvelopeKind::Geometric { c, q } => EnvelopeKind::Geometric { c: c * factor, q },
            z @ EnvelopeKind::ZeroBeyond { .. } => z,
        };
        DecayEnvelope { kind, valid_from: self.valid_from }
    }

    /// Pointwise bound at `s`, or `None` where the envelope asserts nothing.
    pub fn bound(&self, s: f64) -> Option<f64> {
        if s < self.valid_from {
            return None;
        }
        match self.kind {
            EnvelopeKind::Power { c, beta } => Some(c * s.powf(-beta)),
            EnvelopeKind::Geometric { c, q } => Some(c * q.powf(s)),
            EnvelopeKind::ZeroBeyond { last } => (s > last).then_some(0.0),
        }
    }

    fn is_zero(&self) -> bool {
        match self.kind {
            EnvelopeKind::Power { c, .. } | EnvelopeKind::Geometric { c, .. } => c == 0.0,
            EnvelopeKind::ZeroBeyond { .. } => false,
        }
    }

    /// Whether `sum_j j^weight * bound(j)` converges.
    pub fn is_summable(&self, weight: f64) -> bool {
        match self.kind {
            EnvelopeKind::Power { c, beta } => c == 0.0 || weight - beta < -1.0,
            EnvelopeKind::Geometric { .. } | EnvelopeKind::ZeroBeyond { .. } => true,
        }
    }

    /// Same convergence condition at infinity for `int s^weight bound(s) ds`.
    pub fn is_integrable(&self, weight: f64) -> bool {
        self.is_summable(weight)
    }

    fn check_covers(&self, tail_start: f64) -> Result<()> {
        if tail_start < self.valid_from {
            return Err(Error::EnvelopeNotValid {
                valid_from: self.valid_from,
                tail_start,
            });
        }
        if let EnvelopeKind::ZeroBeyond { last } = self.kind {
            if tail_start <= last {
                return Err(Error::EnvelopeNotValid {
                    valid_from: last,
                    tail_start,
                });
            }
        }
        Ok(())
    }

    /// Upper bound for `sum_{j >= from} j^weight * bound(j)`.
    ///
    /// Power law: integral comparison. Geometric: explicit terms until the
    /// term ratio drops below `sqrt(q)`, then a geometric majorant.
    pub fn sum_tail(&self, weight: f64, from: u64) -> Result<f64> {
        if from == 0 {
            return Err(Error::Invalid("discrete tails start at index >= 1".into()));
        }
        if !self.is_summable(weight) {
            return Err(Error::NonSummable {
                weight,
                envelope: self.to_string(),
            });
        }
        self.check_covers(from as f64)?;
        if self.is_zero() {
            return Ok(0.0);
        }
        match self.kind {
            EnvelopeKind::ZeroBeyond { .. } => Ok(0.0),
            EnvelopeKind::Power { c, beta } => {
                let e = weight - beta;
                let k = from as f64;
                if from >= 2 {
                    // sum_{j>=k} j^e <= int_{k-1}^inf s^e ds
                    Ok(c * (k - 1.0).powf(e + 1.0) / (-e - 1.0))
                } else {
                    Ok(c * (1.0 + 1.0 / (-e - 1.0)))
                }
            }
            EnvelopeKind::Geometric { c, q } => {
                let ln_c = c.ln();
                let ln_q = q.ln();
                let term = |j: u64| (weight * (j as f64).ln() + ln_c + j as f64 * ln_q).exp();
                // sum explicitly until the ratio is below sqrt(q), then majorize
                let threshold = q.sqrt();
                let mut acc = 0.0;
                let mut j = from;
                loop {
                    let ratio = if weight <= 0.0 {
                        q
                    } else {
                        ((j as f64 + 1.0) / j as f64).powf(weight) * q
                    };
                    if ratio <= threshold {
                        return Ok(acc + term(j) / (1.0 - ratio));
                    }
                    acc += term(j);
                    j += 1;
                }
            }
        }
    }

    /// Upper bound for `int_from^inf s^weight * bound(s) ds`.
    pub fn integral_tail(&self, weight: f64, from: f64) -> Result<f64> {
        if !self.is_integrable(weight) {
            return Err(Error::NonIntegrable {
                weight,
                envelope: self.to_string(),
            });
        }
        self.check_covers(from)?;
        if self.is_zero() {
            return Ok(0.0);
        }
        let needs_positive = || {
            Err(Error::Invalid(format!(
                "tail of {self} with weight {weight} must start at a positive abscissa, got {from}"
            )))
        };
        match self.kind {
            EnvelopeKind::ZeroBeyond { .. } => Ok(0.0),
            EnvelopeKind::Power { c, beta } => {
                if from <= 0.0 {
                    return needs_positive();
                }
                let e = weight - beta;
                Ok(c * from.powf(e + 1.0) / (-e - 1.0))
            }
            EnvelopeKind::Geometric { c, q } => {
                let rate = -q.ln();
                if weight == 0.0 {
                    return Ok(c * (-rate * from).exp() / rate);
                }
                if weight < 0.0 {
                    if from <= 0.0 {
                        return needs_positive();
                    }
                    // s^w <= from^w on the tail
                    return Ok(c * (weight * from.ln() - rate * from).exp() / rate);
                }
                // s^w e^{-rate s/2} <= (2w/(e rate))^w everywhere
                let ln_peak = weight * (2.0 * weight / (std::f64::consts::E * rate)).ln();
                let mut best = c * (ln_peak - 0.5 * rate * from).exp() * 2.0 / rate;
                // log-concave decay once rate > w/from
                if from > 0.0 && rate * from > weight {
                    let slope = rate - weight / from;
                    let b = c * (weight * from.ln() - rate * from).exp() / slope;
                    best = best.min(b);
                }
                Ok(best)
            }
        }
    }
}
