#![allow(dead_code)]

/// Binomial coefficient as a float, from the multiplicative formula.
pub fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Backward solver for `Delta^m x_n = a_n f(x_n) + b_n` on `[1, end]` with
/// `x_j = y_j` for `j` in `(end, end + m]`: each step solves the scalar
/// equation for `x_n` by bisection.
pub fn backward_difference_oracle(
    m: u32,
    end: u64,
    a: impl Fn(u64) -> f64,
    b: impl Fn(u64) -> f64,
    y: impl Fn(u64) -> f64,
    f: impl Fn(f64) -> f64,
    bound: f64,
) -> Vec<f64> {
    let mut x = vec![0.0; (end + m as u64 + 1) as usize];
    for j in end + 1..=end + m as u64 {
        x[j as usize] = y(j);
    }
    let lead = if m % 2 == 0 { 1.0 } else { -1.0 };
    for n in (1..=end).rev() {
        // Delta^m x_n = sum_i (-1)^(m-i) C(m, i) x_{n+i}
        let known: f64 = (1..=m)
            .map(|i| {
                let s = if (m - i) % 2 == 0 { 1.0 } else { -1.0 };
                s * binom(m, i) * x[(n + i as u64) as usize]
            })
            .sum();
        let rhs = b(n) - known;
        let an = a(n);
        let g = |u: f64| lead * u - an * f(u) - rhs;
        let centre = lead * rhs;
        let width = an.abs() * bound + 1.0;
        let (mut lo, mut hi) = (centre - width, centre + width);
        let increasing = g(hi) > g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) > 0.0) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        x[n as usize] = 0.5 * (lo + hi);
    }
    x[1..=end as usize].to_vec()
}

/// Backward RK4 for `x^(m) = a(t) f(x) + b(t)` from `t_end` with the state
/// `(y, y', ..., y^(m-1))` at `t_end`, stepping over `grid` from the right with
/// `substeps` RK4 steps per interval. Returns `x` at every grid point.
pub fn backward_rk4_oracle(
    m: usize,
    grid: &[f64],
    terminal: Vec<f64>,
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    substeps: usize,
) -> Vec<f64> {
    let rhs = |t: f64, u: &[f64]| -> Vec<f64> {
        let mut du = u[1..].to_vec();
        du.push(a(t) * f(u[0]) + b(t));
        du
    };
    let axpy = |u: &[f64], k: &[f64], s: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut u = terminal;
    assert_eq!(u.len(), m);
    let mut out = vec![0.0; grid.len()];
    out[grid.len() - 1] = u[0];
    for i in (0..grid.len() - 1).rev() {
        let h = -(grid[i + 1] - grid[i]) / substeps as f64;
        let mut t = grid[i + 1];
        for _ in 0..substeps {
            let k1 = rhs(t, &u);
            let k2 = rhs(t + 0.5 * h, &axpy(&u, &k1, 0.5 * h));
            let k3 = rhs(t + 0.5 * h, &axpy(&u, &k2, 0.5 * h));
            let k4 = rhs(t + h, &axpy(&u, &k3, h));
            for j in 0..m {
                u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            t += h;
        }
        out[i] = u[0];
    }
    out
}
