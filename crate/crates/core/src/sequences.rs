//! Finite windows of real sequences, forward differences, rising factorials,
//! weighted tail sums with certified bounds and the extended sup metric.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};

/// Values `x_p, ..., x_{p+N}` of a real sequence on `N_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceWindow {
    start: u64,
    values: Vec<f64>,
}

impl SequenceWindow {
    pub fn new(start: u64, values: Vec<f64>) -> Result<Self> {
        if start == 0 {
            return Err(Error::Invalid("sequence windows start at index >= 1".into()));
        }
        if values.is_empty() {
            return Err(Error::InsufficientData("empty sequence window".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value {} at index {}",
                values[i],
                start + i as u64
            )));
        }
        Ok(SequenceWindow { start, values })
    }

    /// Samples `f(n)` for `n = start ..= end`.
    pub fn from_fn(start: u64, end: u64, f: impl Fn(u64) -> f64) -> Result<Self> {
        if end < start {
            return Err(Error::InsufficientData(format!("empty range [{start}, {end}]")));
        }
        Self::new(start, (start..=end).map(f).collect())
    }

    pub fn zeros(start: u64, end: u64) -> Result<Self> {
        Self::from_fn(start, end, |_| 0.0)
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Last stored index `p + N`.
    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> {
        self.start..=self.end()
    }

    pub fn get(&self, n: u64) -> Result<f64> {
        self.offset(n).map(|i| self.values[i])
    }

    pub(crate) fn offset(&self, n: u64) -> Result<usize> {
        if n < self.start || n > self.end() {
            return Err(Error::Index {
                index: n,
                start: self.start,
                end: self.end(),
            });
        }
        Ok((n - self.start) as usize)
    }

    /// Sub-window on `[n1, n2]`.
    pub fn slice(&self, n1: u64, n2: u64) -> Result<SequenceWindow> {
        let i1 = self.offset(n1)?;
        let i2 = self.offset(n2)?;
        if i2 < i1 {
            return Err(Error::InsufficientData(format!("empty range [{n1}, {n2}]")));
        }
        Ok(SequenceWindow {
            start: n1,
            values: self.values[i1..=i2].to_vec(),
        })
    }

    pub fn map(&self, f: impl Fn(u64, f64) -> f64) -> Result<SequenceWindow> {
        Self::new(
            self.start,
            self.indices().zip(&self.values).map(|(n, &v)| f(n, v)).collect(),
        )
    }

    pub fn abs(&self) -> SequenceWindow {
        SequenceWindow {
            start: self.start,
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub(crate) fn check_same_shape(&self, other: &SequenceWindow) -> Result<()> {
        if self.start != other.start || self.len() != other.len() {
            return Err(Error::Shape(format!(
                "windows [{}, {}] and [{}, {}] differ",
                self.start,
                self.end(),
                other.start,
                other.end()
            )));
        }
        Ok(())
    }
}

/// A value in `[0, inf]`; infinity is a tag, never an IEEE infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedNorm {
    Finite(f64),
    Infinite,
}

impl ExtendedNorm {
    pub fn finite(v: f64) -> Self {
        debug_assert!(v >= 0.0 && v.is_finite());
        ExtendedNorm::Finite(v)
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedNorm::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ExtendedNorm::Finite(v) => Some(v),
            ExtendedNorm::Infinite => None,
        }
    }
}

impl PartialOrd for ExtendedNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtendedNorm::Finite(a), ExtendedNorm::Finite(b)) => a.partial_cmp(b),
            (ExtendedNorm::Finite(_), ExtendedNorm::Infinite) => Some(Ordering::Less),
            (ExtendedNorm::Infinite, ExtendedNorm::Finite(_)) => Some(Ordering::Greater),
            (ExtendedNorm::Infinite, ExtendedNorm::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl Add for ExtendedNorm {
    type Output = ExtendedNorm;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedNorm::Finite(a), ExtendedNorm::Finite(b)) => ExtendedNorm::Finite(a + b),
            _ => ExtendedNorm::Infinite,
        }
    }
}

impl fmt::Display for ExtendedNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedNorm::Finite(v) => write!(f, "{v}"),
            ExtendedNorm::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for ExtendedNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedNorm::Finite(v) => s.serialize_f64(*v),
            ExtendedNorm::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Closed real interval; unbounded sides are `+-inf`, empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalRepr {
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
}

impl From<IntervalRepr> for Interval {
    fn from(r: IntervalRepr) -> Self {
        Interval {
            lo: r.lo.unwrap_or(f64::NEG_INFINITY),
            hi: r.hi.unwrap_or(f64::INFINITY),
        }
    }
}

impl From<Interval> for IntervalRepr {
    fn from(i: Interval) -> Self {
        IntervalRepr {
            lo: i.lo.is_finite().then_some(i.lo),
            hi: i.hi.is_finite().then_some(i.hi),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("(empty)")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// `n (n+1) ... (n+m-1)`, with the empty product `1` for `m = 0`.
pub fn rising_factorial(n: u64, m: u64) -> Result<u128> {
    (0..m).try_fold(1u128, |acc, i| {
        (n as u128)
            .checked_add(i as u128)
            .and_then(|factor| acc.checked_mul(factor))
            .ok_or_else(|| Error::Overflow(format!("rising factorial {n}^({m})")))
    })
}

/// `Delta^k x` on `[p, p+N-k]`, with `Delta x_n = x_{n+1} - x_n`.
pub fn forward_difference(x: &SequenceWindow, k: usize) -> Result<SequenceWindow> {
    if k >= x.len() {
        return Err(Error::InsufficientData(format!(
            "{k}-th difference needs more than {} values",
            x.len()
        )));
    }
    let mut v = x.values.clone();
    for _ in 0..k {
        for i in 0..v.len() - 1 {
            v[i] = v[i + 1] - v[i];
        }
        v.pop();
    }
    Ok(SequenceWindow {
        start: x.start,
        values: v,
    })
}

/// Stored partial sum plus a certified bound for everything past the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    pub tail_bound: f64,
}

impl TailSum {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

/// `sum_{j >= n} j^weight |x_j|` split into the stored part and an envelope bound.
pub fn weighted_tail_sum(
    x: &SequenceWindow,
    env: &DecayEnvelope,
    weight: f64,
    n: u64,
) -> Result<TailSum> {
    if n < x.start {
        return Err(Error::Index {
            index: n,
            start: x.start,
            end: x.end(),
        });
    }
    let tail_from = n.max(x.end() + 1);
    let tail_bound = env.sum_tail(weight, tail_from)?;
    let value = if n > x.end() {
        0.0
    } else {
        let i0 = (n - x.start) as usize;
        // smallest terms first
        x.values[i0..]
            .iter()
            .enumerate()
            .rev()
            .map(|(i, v)| ((n + i as u64) as f64).powf(weight) * v.abs())
            .sum()
    };
    Ok(TailSum { value, tail_bound })
}

/// `max |f - g|` over a shared window.
pub fn sup_metric(f: &SequenceWindow, g: &SequenceWindow) -> Result<ExtendedNorm> {
    f.check_same_shape(g)?;
    sup_distance(&f.values, &g.values)
}

pub(crate) fn sup_distance(f: &[f64], g: &[f64]) -> Result<ExtendedNorm> {
    if f.len() != g.len() {
        return Err(Error::Shape(format!("lengths {} and {} differ", f.len(), g.len())));
    }
    let d = f
        .iter()
        .zip(g)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(if d.is_finite() {
        ExtendedNorm::Finite(d)
    } else {
        ExtendedNorm::Infinite
    })
}

/// `{t : [t - margin, t + margin] in U}`.
pub fn framed_interior(u: Interval, margin: f64) -> Interval {
    Interval::new(u.lo + margin, u.hi - margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn win(start: u64, v: &[f64]) -> SequenceWindow {
        SequenceWindow::new(start, v.to_vec()).unwrap()
    }

    #[test]
    fn rising_factorial_examples() {
        assert_eq!(rising_factorial(5, 0).unwrap(), 1);
        assert_eq!(rising_factorial(1, 4).unwrap(), 24);
        assert_eq!(rising_factorial(3, 2).unwrap(), 12);
        assert_eq!(rising_factorial(0, 3).unwrap(), 0);
    }

    #[test]
    fn rising_factorial_overflow_is_an_error() {
        assert!(matches!(rising_factorial(1, 40), Err(Error::Overflow(_))));
        assert!(rising_factorial(1, 34).is_ok());
        assert!(rising_factorial(u64::MAX, 3).is_err());
    }

    #[test]
    fn forward_difference_examples() {
        let sq = win(1, &[1.0, 4.0, 9.0, 16.0, 25.0]);
        assert_eq!(forward_difference(&sq, 2).unwrap().values(), &[2.0, 2.0, 2.0]);
        assert_eq!(forward_difference(&sq, 0).unwrap(), sq);
        let g = win(1, &[1.0, 0.5, 0.25, 0.125]);
        assert_eq!(forward_difference(&g, 1).unwrap().values(), &[-0.5, -0.25, -0.125]);
        assert!(matches!(forward_difference(&g, 4), Err(Error::InsufficientData(_))));
        assert_eq!(forward_difference(&g, 3).unwrap().len(), 1);
    }

    #[test]
    fn weighted_tail_sum_geometric() {
        let x = SequenceWindow::from_fn(1, 60, |j| 0.5f64.powi(j as i32)).unwrap();
        let env = DecayEnvelope::geometric(1.0, 0.5).unwrap();
        let t = weighted_tail_sum(&x, &env, 1.0, 3).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!(t.tail_bound < 1e-12);
        assert!(t.upper() >= 1.0 - 1e-15);
    }

    #[test]
    fn weighted_tail_sum_zero() {
        let x = SequenceWindow::zeros(1, 10).unwrap();
        let env = DecayEnvelope::power(0.0, 0.5).unwrap();
        let t = weighted_tail_sum(&x, &env, 0.0, 1).unwrap();
        assert_eq!((t.value, t.tail_bound), (0.0, 0.0));
    }

    #[test]
    fn weighted_tail_sum_zeta_two() {
        let x = SequenceWindow::from_fn(1, 10_000, |j| 1.0 / (j as f64).powi(2)).unwrap();
        let env = DecayEnvelope::power(1.0, 2.0).unwrap();
        let t = weighted_tail_sum(&x, &env, 0.0, 1).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(t.value < zeta2 && t.upper() >= zeta2);
        assert!(t.upper() - zeta2 < 1e-7);
    }

    #[test]
    fn weighted_tail_sum_errors() {
        let x = SequenceWindow::zeros(3, 10).unwrap();
        let env = DecayEnvelope::power(1.0, 1.0).unwrap();
        assert!(matches!(weighted_tail_sum(&x, &env, 0.0, 2), Err(Error::Index { .. })));
        assert!(matches!(weighted_tail_sum(&x, &env, 0.0, 3), Err(Error::NonSummable { .. })));
    }

    #[test]
    fn sup_metric_examples() {
        let f = win(1, &[0.0, 0.0, 0.0]);
        let g = win(1, &[1.0, -2.0, 0.0]);
        assert_eq!(sup_metric(&f, &f).unwrap(), ExtendedNorm::Finite(0.0));
        assert_eq!(sup_metric(&f, &g).unwrap(), ExtendedNorm::Finite(2.0));
        let h = SequenceWindow::from_fn(1, 50, |n| 0.5f64.powi(n as i32)).unwrap();
        assert_eq!(sup_metric(&h, &SequenceWindow::zeros(1, 50).unwrap()).unwrap(), ExtendedNorm::Finite(0.5));
        assert!(matches!(sup_metric(&f, &win(2, &[0.0, 0.0, 0.0])), Err(Error::Shape(_))));
    }

    #[test]
    fn extended_norm_ordering() {
        assert!(ExtendedNorm::Finite(1e300) < ExtendedNorm::Infinite);
        assert_eq!(ExtendedNorm::Finite(1.0) + ExtendedNorm::Infinite, ExtendedNorm::Infinite);
        assert_eq!(serde_json::to_string(&ExtendedNorm::Infinite).unwrap(), "\"infinite\"");
    }

    #[test]
    fn framed_interior_examples() {
        assert_eq!(framed_interior(Interval::new(-2.0, 2.0), 1.0), Interval::new(-1.0, 1.0));
        assert_eq!(framed_interior(Interval::real_line(), 7.0), Interval::real_line());
        assert!(framed_interior(Interval::new(0.0, 1.0), 0.6).is_empty());
    }

    #[test]
    fn interval_json_uses_null_for_unbounded() {
        let s = serde_json::to_string(&Interval::new(f64::NEG_INFINITY, 2.0)).unwrap();
        assert_eq!(s, r#"{"lo":null,"hi":2.0}"#);
        let back: Interval = serde_json::from_str(r#"{"hi":2.0}"#).unwrap();
        assert_eq!(back, Interval::new(f64::NEG_INFINITY, 2.0));
    }

    #[test]
    fn window_rejects_non_finite() {
        assert!(SequenceWindow::new(1, vec![1.0, f64::NAN]).is_err());
        assert!(SequenceWindow::new(0, vec![1.0]).is_err());
        assert!(SequenceWindow::new(1, vec![]).is_err());
    }
}
