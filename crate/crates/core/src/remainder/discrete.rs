//! Discrete iterated remainder
//! `r^m x_n = sum_{j >= n} C(j - n + m - 1, m - 1) x_j`.
//!
//! The stored window is summed exactly and the part past the window is bounded
//! through the decay envelope, using `C(j - n + m - 1, m - 1) <= j^(m-1)` for
//! `j >= n >= 1`. Two evaluation routes exist: [`rm_value`] walks the binomial
//! coefficients directly, [`rm_window`] nests `m` tail sums. On a truncated
//! window they agree exactly in exact arithmetic (hockey-stick identity).

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::remainder::{Bracket, SummabilityReport, Verdict};
use crate::sequences::{forward_difference, weighted_tail_sum, ExtendedNorm, SequenceWindow};

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderInput {
    x: SequenceWindow,
    env: DecayEnvelope,
    order: u32,
    tail_bound: f64,
}

impl RemainderInput {
    /// Rejects envelopes for which `sum j^(m-1) env(j)` diverges.
    pub fn new(x: SequenceWindow, env: DecayEnvelope, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("remainder order must be >= 1".into()));
        }
        let tail_bound = env.sum_tail(order as f64 - 1.0, x.end() + 1)?;
        Ok(RemainderInput {
            x,
            env,
            order,
            tail_bound,
        })
    }

    pub fn x(&self) -> &SequenceWindow {
        &self.x
    }

    pub fn envelope(&self) -> &DecayEnvelope {
        &self.env
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Bound on the contribution of indices past the window, valid for every n in it.
    pub fn truncation_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Same data at a lower order (order 0 is the identity).
    fn lower(&self, order: u32) -> Result<(u32, f64)> {
        if order > self.order {
            return Err(Error::Invalid(format!("order {order} exceeds {}", self.order)));
        }
        if order == 0 {
            return Ok((0, 0.0));
        }
        // sum j^(k-1) env <= sum j^(m-1) env for k <= m
        let bound = self.env.sum_tail(order as f64 - 1.0, self.x.end() + 1)?;
        Ok((order, bound))
    }
}

/// `r^m x_n` by direct coefficient summation.
pub fn rm_value(input: &RemainderInput, n: u64) -> Result<Bracket> {
    let x = &input.x;
    let i0 = x.offset(n)?;
    let m = input.order as f64;
    let values = &x.values()[i0..];
    // C(k + m - 1, m - 1) for k = 0, 1, ...
    let mut coeffs = Vec::with_capacity(values.len());
    let mut c = 1.0;
    for k in 0..values.len() {
        coeffs.push(c);
        c *= (k as f64 + m) / (k as f64 + 1.0);
    }
    let value = values.iter().zip(&coeffs).rev().map(|(v, c)| c * v).sum();
    Ok(Bracket {
        value,
        error_bound: input.tail_bound,
    })
}

/// `r^order` on the whole stored window, truncated at the window end.
fn nested_tail_sums(values: &[f64], order: u32) -> Vec<f64> {
    let mut cur = values.to_vec();
    for _ in 0..order {
        let mut acc = 0.0;
        for v in cur.iter_mut().rev() {
            acc += *v;
            *v = acc;
        }
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderWindow {
    pub values: SequenceWindow,
    /// Max over the range of the truncation bound.
    pub error_bound: f64,
}

/// `r^m x` on `[n1, n2]` by nested tail sums.
pub fn rm_window(input: &RemainderInput, n1: u64, n2: u64) -> Result<RemainderWindow> {
    rm_window_of_order(input, input.order, n1, n2)
}

fn rm_window_of_order(input: &RemainderInput, order: u32, n1: u64, n2: u64) -> Result<RemainderWindow> {
    let (order, error_bound) = input.lower(order)?;
    let x = &input.x;
    x.offset(n1)?;
    x.offset(n2)?;
    let full = SequenceWindow::new(x.start(), nested_tail_sums(x.values(), order))?;
    Ok(RemainderWindow {
        values: full.slice(n1, n2)?,
        error_bound,
    })
}

/// `max_n |Delta^k (r^m x)_n - (-1)^k (r^(m-k) x)_n|` over `[n1, n2]`, with `r^0 = id`.
pub fn check_difference_identity(input: &RemainderInput, k: u32, n1: u64, n2: u64) -> Result<f64> {
    if k > input.order {
        return Err(Error::Invalid(format!("k = {k} exceeds order {}", input.order)));
    }
    let top = n2
        .checked_add(k as u64)
        .filter(|&t| t <= input.x.end())
        .ok_or_else(|| {
            Error::InsufficientData(format!(
                "{k} differences at {n2} need indices past window end {}",
                input.x.end()
            ))
        })?;
    let rm = rm_window(input, n1, top)?.values;
    let lhs = forward_difference(&rm, k as usize)?;
    let rhs = rm_window_of_order(input, input.order - k, n1, n2)?.values;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(l, r)| (l - sign * r).abs())
        .fold(0.0, f64::max))
}

/// Certifies `sum_{n >= p} n^(m-1-alpha) |x_n| < inf` from the window and envelope.
///
/// A divergent envelope is a verdict, not an error; an envelope that does not
/// cover the tail is still an error.
pub fn summability_certificate(
    env: &DecayEnvelope,
    x: &SequenceWindow,
    order: u32,
    alpha: f64,
) -> Result<SummabilityReport> {
    if order == 0 {
        return Err(Error::Invalid("order must be >= 1".into()));
    }
    if alpha > 0.0 {
        return Err(Error::Invalid(format!("alpha must be <= 0, got {alpha}")));
    }
    let exponent = order as f64 - 1.0 - alpha;
    match weighted_tail_sum(x, env, exponent, x.start()) {
        Ok(t) => Ok(SummabilityReport {
            exponent,
            partial: t.value,
            tail_bound: ExtendedNorm::finite(t.tail_bound),
            verdict: Verdict::CertifiedFinite,
        }),
        Err(Error::NonSummable { .. }) => {
            let partial = x
                .indices()
                .zip(x.values())
                .map(|(j, v)| (j as f64).powf(exponent) * v.abs())
                .sum();
            Ok(SummabilityReport {
                exponent,
                partial,
                tail_bound: ExtendedNorm::Infinite,
                verdict: Verdict::DivergentEnvelope,
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves(end: u64) -> RemainderInput {
        let x = SequenceWindow::from_fn(1, end, |j| 0.5f64.powi(j as i32)).unwrap();
        RemainderInput::new(x, DecayEnvelope::geometric(1.0, 0.5).unwrap(), 1).unwrap()
    }

    fn with_order(input: &RemainderInput, m: u32) -> RemainderInput {
        RemainderInput::new(input.x().clone(), *input.envelope(), m).unwrap()
    }

    #[test]
    fn rm_value_geometric_order_one() {
        let input = halves(200);
        let b = rm_value(&input, 4).unwrap();
        assert!((b.value - 0.125).abs() < 1e-16);
        assert!(b.error_bound < 1e-50);
    }

    #[test]
    fn rm_value_geometric_order_two() {
        let input = with_order(&halves(200), 2);
        let b = rm_value(&input, 3).unwrap();
        assert!((b.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rm_value_zero_input() {
        let x = SequenceWindow::zeros(1, 30).unwrap();
        let input = RemainderInput::new(x, DecayEnvelope::geometric(0.0, 0.5).unwrap(), 3).unwrap();
        assert_eq!(rm_value(&input, 5).unwrap(), Bracket { value: 0.0, error_bound: 0.0 });
    }

    #[test]
    fn rm_value_rejects_index_before_start() {
        let x = SequenceWindow::from_fn(3, 10, |j| 1.0 / (j * j * j) as f64).unwrap();
        let input = RemainderInput::new(x, DecayEnvelope::power(1.0, 3.0).unwrap(), 1).unwrap();
        assert!(matches!(rm_value(&input, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn divergent_envelope_is_rejected_at_construction() {
        let x = SequenceWindow::from_fn(1, 10, |j| 1.0 / (j * j) as f64).unwrap();
        // sum j^1 j^-2 diverges
        let r = RemainderInput::new(x, DecayEnvelope::power(1.0, 2.0).unwrap(), 2);
        assert!(matches!(r, Err(Error::NonSummable { .. })));
    }

    #[test]
    fn rm_window_examples() {
        let input = halves(200);
        let w = rm_window(&input, 1, 5).unwrap();
        assert_eq!(w.values.values(), &[1.0, 0.5, 0.25, 0.125, 0.0625]);
        let w3 = rm_window(&with_order(&input, 3), 3, 3).unwrap();
        assert!((w3.values.values()[0] - 1.0).abs() < 1e-15);
        let z = RemainderInput::new(SequenceWindow::zeros(1, 9).unwrap(), DecayEnvelope::zero_beyond(9.0), 4).unwrap();
        assert!(rm_window(&z, 1, 9).unwrap().values.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn both_routes_agree() {
        let x = SequenceWindow::from_fn(1, 150, |j| (j as f64) * 3f64.powi(-(j as i32))).unwrap();
        for m in 1..=5 {
            let input = RemainderInput::new(x.clone(), DecayEnvelope::geometric(1.0, 0.5).unwrap(), m).unwrap();
            let w = rm_window(&input, 1, 40).unwrap();
            for (n, v) in w.values.indices().zip(w.values.values()) {
                let direct = rm_value(&input, n).unwrap().value;
                assert!((direct - v).abs() <= 1e-14 * v.abs().max(1e-300), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn difference_identity_examples() {
        let input = halves(200);
        let d = check_difference_identity(&input, 1, 1, 50).unwrap();
        assert!(d <= 1e-16 + input.truncation_bound());
        assert_eq!(check_difference_identity(&with_order(&input, 3), 0, 1, 50).unwrap(), 0.0);

        let x = SequenceWindow::from_fn(1, 120, |j| (j as f64) * 3f64.powi(-(j as i32))).unwrap();
        let input = RemainderInput::new(x, DecayEnvelope::geometric(1.0, 0.5).unwrap(), 3).unwrap();
        assert!(check_difference_identity(&input, 2, 1, 20).unwrap() < 1e-10);
        assert!(check_difference_identity(&input, 4, 1, 20).is_err());
        assert!(check_difference_identity(&input, 3, 1, 119).is_err());
    }

    #[test]
    fn summability_examples() {
        let x = SequenceWindow::from_fn(1, 1000, |j| 1.0 / (j * j) as f64).unwrap();
        let r = summability_certificate(&DecayEnvelope::power(1.0, 2.0).unwrap(), &x, 1, 0.0).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(r.is_certified());
        assert!(r.partial < zeta2 && r.upper_bound() >= ExtendedNorm::Finite(zeta2));

        let h = SequenceWindow::from_fn(1, 1000, |j| 1.0 / j as f64).unwrap();
        let r = summability_certificate(&DecayEnvelope::power(1.0, 1.0).unwrap(), &h, 1, 0.0).unwrap();
        assert_eq!(r.verdict, Verdict::DivergentEnvelope);
        assert_eq!(r.upper_bound(), ExtendedNorm::Infinite);

        let g = SequenceWindow::from_fn(1, 100, |j| 5.0 * 0.9f64.powi(j as i32)).unwrap();
        let r = summability_certificate(&DecayEnvelope::geometric(5.0, 0.9).unwrap(), &g, 4, -2.0).unwrap();
        assert!(r.is_certified());
        assert_eq!(r.exponent, 5.0);
    }
}
