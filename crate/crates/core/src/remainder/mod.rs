//! Iterated remainder operators `r^m` on sequences and on functions of `t >= t0`.

pub mod continuous;
pub mod discrete;

use serde::Serialize;

use crate::sequences::ExtendedNorm;

/// A computed quantity together with a certified bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedFinite,
    DivergentEnvelope,
}

/// Outcome of checking `sum n^exponent |x_n| < inf` (or the integral analogue).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub exponent: f64,
    pub partial: f64,
    pub tail_bound: ExtendedNorm,
    pub verdict: Verdict,
}

impl SummabilityReport {
    /// Upper bound for the full series or integral.
    pub fn upper_bound(&self) -> ExtendedNorm {
        ExtendedNorm::Finite(self.partial) + self.tail_bound
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::CertifiedFinite
    }
}
