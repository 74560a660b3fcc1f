//! Adaptive Gauss-Kronrod (7/15) quadrature with QUADPACK-style error estimates.
//!
//! [`integrate_many`] integrates several integrands that share abscissae in a
//! single pass, which is how the moment tables for kernels `(s - t)^k` are built.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadratureConfig {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Invalid(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Invalid("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    resabs: f64,
    total_error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.total_error == other.total_error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_error.total_cmp(&other.total_error)
    }
}

impl Panel {
    fn at_roundoff(&self) -> bool {
        self.total_error <= 50.0 * f64::EPSILON * self.resabs
            || (self.b - self.a) <= 1e3 * f64::EPSILON * self.a.abs().max(self.b.abs())
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

fn gk15<F>(f: &F, dim: usize, a: f64, b: f64, scratch: &mut [Vec<f64>; 15]) -> Panel
where
    F: Fn(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // scratch[0] = centre, then (left, right) pairs for XGK[0..7]
    f(center, &mut scratch[0]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let (l, r) = scratch[1 + 2 * j..3 + 2 * j].split_at_mut(1);
        f(center - dx, &mut l[0]);
        f(center + dx, &mut r[0]);
    }
    let mut values = Vec::with_capacity(dim);
    let mut errors = Vec::with_capacity(dim);
    let mut resabs_total = 0.0;
    for d in 0..dim {
        let fc = scratch[0][d];
        let mut kron = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut resabs = kron.abs();
        for j in 0..7 {
            let (f1, f2) = (scratch[1 + 2 * j][d], scratch[2 + 2 * j][d]);
            kron += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * kron;
        let mut resasc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((scratch[1 + 2 * j][d] - mean).abs() + (scratch[2 + 2 * j][d] - mean).abs());
        }
        let ah = half.abs();
        let err = rescale_error((kron - gauss) * half, resabs * ah, resasc * ah);
        values.push(kron * half);
        errors.push(err);
        resabs_total += resabs * ah;
    }
    let total_error = errors.iter().sum();
    Panel {
        a,
        b,
        values,
        errors,
        resabs: resabs_total,
        total_error,
    }
}

/// Integrates a vector-valued integrand of dimension `dim` over `[a, b]`.
///
/// `f(s, out)` writes the `dim` integrand values at `s` into `out`. Bisection
/// is driven by the summed error of all components.
pub fn integrate_many<F>(f: F, dim: usize, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Vec<QuadResult>>
where
    F: Fn(f64, &mut [f64]),
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Invalid(format!("quadrature bounds must be finite, got [{a}, {b}]")));
    }
    if a == b || dim == 0 {
        return Ok(vec![QuadResult { value: 0.0, error: 0.0 }; dim]);
    }
    let mut scratch: [Vec<f64>; 15] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, dim, a, b, &mut scratch);
    let mut total_error = first.total_error;
    heap.push(first);
    let mut subdivisions = 1;
    while total_error > cfg.abs_tol && subdivisions < cfg.max_subdivisions {
        let worst = heap.peek().expect("heap is never empty");
        if worst.at_roundoff() {
            break;
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, dim, worst.a, mid, &mut scratch);
        let right = gk15(&f, dim, mid, worst.b, &mut scratch);
        total_error += left.total_error + right.total_error - worst.total_error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    let panels = heap.into_vec();
    // recompute sums from scratch to avoid drift in the running total
    let total_error: f64 = panels.iter().map(|p| p.total_error).sum();
    let resabs: f64 = panels.iter().map(|p| p.resabs).sum();
    let out: Vec<QuadResult> = (0..dim)
        .map(|d| QuadResult {
            value: panels.iter().map(|p| p.values[d]).sum(),
            error: panels.iter().map(|p| p.errors[d]).sum(),
        })
        .collect();
    let floor = 100.0 * f64::EPSILON * resabs;
    if total_error > cfg.abs_tol.max(floor) {
        return Err(Error::Precision {
            a,
            b,
            value: out[0].value,
            error: total_error,
            tol: cfg.abs_tol,
        });
    }
    Ok(out)
}

/// Integrates `f` over `[a, b]` (with `a <= b` or reversed orientation).
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_many(|s, out| out[0] = f(s), 1, a, b, cfg)?;
    Ok(r[0])
}
