//! Acceptance gate: one line per criterion, nonzero exit if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{backward_difference_oracle, backward_rk4_oracle, binom};
use rand::{rngs::StdRng, Rng, SeedableRng};
use remop::remainder::continuous::{derivative_identity_check, fubini_check, rm_cont, EnvelopedFn};
use remop::remainder::discrete::{check_difference_identity, rm_value, rm_window, RemainderInput};
use remop::solver::continuous::{residual_ode, solve_ode, GridConfig, OdeSpec};
use remop::solver::discrete::{solve, DifferenceEquationSpec};
use remop::solver::{SolveOptions, SolveStatus};
use remop::{DecayEnvelope, Execution, Interval, QuadratureConfig, SequenceWindow};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn discrete_inversion() -> Outcome {
    let clock = Instant::now();
    let inputs = [
        (SequenceWindow::from_fn(1, 200, |j| 0.5f64.powi(j as i32)).unwrap(), DecayEnvelope::geometric(1.0, 0.5).unwrap()),
        (SequenceWindow::from_fn(1, 200, |j| (j as f64).powi(-5)).unwrap(), DecayEnvelope::power(1.0, 5.0).unwrap()),
    ];
    let mut worst = 0.0f64;
    for (x, env) in &inputs {
        for m in 1..=4 {
            let input = RemainderInput::new(x.clone(), *env, m).map_err(|e| e.to_string())?;
            worst = worst.max(check_difference_identity(&input, m, 1, 50).map_err(|e| e.to_string())?);
        }
    }
    let elapsed = clock.elapsed();
    check(
        worst < 1e-10 && within(elapsed, 1.0),
        format!("max deviation {worst:.3e} (< 1e-10), {:.3} s (< 1 s)", elapsed.as_secs_f64()),
    )
}

fn discrete_ladder() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..50 {
        let c: f64 = rng.gen_range(-10.0..10.0);
        let q: f64 = rng.gen_range(0.05..0.95);
        let x = SequenceWindow::from_fn(1, 400, |j| c * q.powi(j as i32)).unwrap();
        for m in 1..=4 {
            let input = RemainderInput::new(x.clone(), DecayEnvelope::geometric(c.abs(), q).unwrap(), m).map_err(|e| e.to_string())?;
            for k in 0..=m {
                worst = worst.max(check_difference_identity(&input, k, 1, 50).map_err(|e| e.to_string())?);
                cases += 1;
            }
        }
    }
    check(worst < 1e-9, format!("max deviation {worst:.3e} over {cases} (input, m, k) cases (< 1e-9)"))
}

fn geometric_closed_form() -> Outcome {
    let x = SequenceWindow::from_fn(1, 200, |j| 0.5f64.powi(j as i32)).unwrap();
    let env = DecayEnvelope::geometric(1.0, 0.5).unwrap();
    let mut worst_gf = 0.0f64;
    let mut worst_brute = 0.0f64;
    for m in 1..=4u32 {
        let input = RemainderInput::new(x.clone(), env, m).map_err(|e| e.to_string())?;
        let window = rm_window(&input, 1, 20).map_err(|e| e.to_string())?.values;
        for n in 1..=20u64 {
            // sum_k C(k+m-1, m-1) z^k = (1-z)^(-m) at z = 1/2, times 2^(-n)
            let gf = 2f64.powi(m as i32 - n as i32);
            let brute: f64 = (0..10_000u32)
                .rev()
                .map(|k| binom(k + m - 1, m - 1) * 0.5f64.powi((n as u32 + k) as i32))
                .sum();
            worst_brute = worst_brute.max((brute - gf).abs() / gf);
            for v in [rm_value(&input, n).map_err(|e| e.to_string())?.value, window.get(n).unwrap()] {
                worst_gf = worst_gf.max((v - gf).abs() / gf);
            }
        }
    }
    check(
        worst_gf < 1e-12 && worst_brute < 1e-12,
        format!("max relative error {worst_gf:.3e} (< 1e-12); oracle vs 10^4-term partial sums {worst_brute:.3e}"),
    )
}

fn order_swap() -> Outcome {
    let clock = Instant::now();
    let q = QuadratureConfig::default();
    let fs: [fn(f64) -> f64; 4] = [|_| 1.0, |s| s, |s| s * s, |s| (-s).exp()];
    let mut worst = 0.0f64;
    for f in fs {
        for (a, b) in [(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)] {
            for m in 0..=2 {
                worst = worst.max(fubini_check(&f, a, b, m, &q).map_err(|e| e.to_string())?);
            }
        }
    }
    let elapsed = clock.elapsed();
    check(
        worst < 1e-8 && within(elapsed, 1.0),
        format!("max deviation {worst:.3e} (< 1e-8), {:.3} s (< 1 s)", elapsed.as_secs_f64()),
    )
}

fn exp_fn() -> EnvelopedFn {
    EnvelopedFn::from_fn(|s: f64| (-s).exp(), DecayEnvelope::exponential(1.0, 1.0).unwrap(), 0.0, 60.0).unwrap()
}

fn eigen_identity() -> Outcome {
    let f = exp_fn();
    let q = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for m in 1..=3 {
        for t in [0.5, 1.0, 2.0, 5.0] {
            let r = rm_cont(&f, m, t, &q).map_err(|e| e.to_string())?;
            worst = worst.max((r.value - (-t).exp()).abs());
        }
    }
    check(worst < 1e-8, format!("max deviation {worst:.3e} (< 1e-8)"))
}

fn continuous_derivatives() -> Outcome {
    let f = exp_fn();
    let q = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for m in 1..=3 {
        for k in 0..=m {
            for t in [0.5, 1.0, 2.0, 5.0] {
                worst = worst.max(derivative_identity_check(&f, m, k, t, 1e-3, &q).map_err(|e| e.to_string())?);
            }
        }
    }
    check(worst < 1e-5, format!("max deviation {worst:.3e} at h = 1e-3 (< 1e-5)"))
}

fn difference_spec(y0: f64) -> DifferenceEquationSpec {
    let end = 200;
    DifferenceEquationSpec {
        order: 1,
        a: SequenceWindow::from_fn(1, end, |n| 0.25 * 0.5f64.powi(n as i32)).unwrap(),
        a_env: DecayEnvelope::geometric(0.25, 0.5).unwrap(),
        b: SequenceWindow::zeros(1, end).unwrap(),
        f: Arc::new(|_, x| x.sin()),
        bound: 1.0,
        domain: Interval::real_line(),
        margin: 0.25,
        alpha: 0.0,
        y: SequenceWindow::from_fn(1, end, |_| y0).unwrap(),
        lipschitz: Some(1.0),
        execution: Execution::default(),
    }
}

fn discrete_end_to_end() -> Outcome {
    let opts = SolveOptions { tol: 1e-10, ..SolveOptions::default() };
    let mut details = Vec::new();
    let mut ok = true;
    // y = 0 is the stated instance (solution x = 0); y = 1 exercises the iteration.
    for y0 in [0.0, 1.0] {
        let clock = Instant::now();
        let spec = difference_spec(y0);
        let r = solve(&spec, &opts).map_err(|e| e.to_string())?;
        let elapsed = clock.elapsed();
        let oracle = backward_difference_oracle(1, spec.end(), |n| 0.25 * 0.5f64.powi(n as i32), |_| 0.0, |_| y0, f64::sin, 1.0);
        let agreement = (1..=60u64)
            .map(|n| (r.x.get(n).unwrap() - oracle[(n - 1) as usize]).abs())
            .fold(0.0, f64::max);
        ok &= r.status == SolveStatus::Converged
            && r.iterations <= 30
            && r.residual_max < 1e-9
            && agreement < 1e-8
            && within(elapsed, 1.0);
        details.push(format!(
            "y={y0}: {:?} in {} iterations (<= 30), residual {:.3e} (< 1e-9), oracle {:.3e} (< 1e-8), {:.3} s (< 1 s)",
            r.status,
            r.iterations,
            r.residual_max,
            agreement,
            elapsed.as_secs_f64()
        ));
    }
    check(ok, details.join("; "))
}

fn ode_end_to_end() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for y0 in [0.0, 1.0] {
        let spec = OdeSpec {
            order: 1,
            t0: 0.0,
            a: Arc::new(|t: f64| 0.25 * (-t).exp()),
            a_env: DecayEnvelope::exponential(0.25, 1.0).unwrap(),
            b: Arc::new(|_| 0.0),
            f: Arc::new(|_, x| x.sin()),
            bound: 1.0,
            domain: Interval::real_line(),
            margin: 0.25,
            alpha: 0.0,
            y: Arc::new(move |_| y0),
            quadrature: QuadratureConfig::default(),
            grid: GridConfig::default(),
            lipschitz: Some(1.0),
            execution: Execution::default(),
        };
        let r = solve_ode(&spec, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let h = 1e-3;
        let samples: Vec<f64> = r.x.grid().iter().copied().filter(|&t| t >= h && t <= 30.0).collect();
        let residual = residual_ode(&spec, &r.x, &samples, h).map_err(|e| e.to_string())?;
        let grid = r.x.grid().to_vec();
        let oracle = backward_rk4_oracle(1, &grid, vec![y0], |t| 0.25 * (-t).exp(), |_| 0.0, f64::sin, 4);
        let agreement = grid
            .iter()
            .zip(r.x.values())
            .zip(&oracle)
            .filter(|((t, _), _)| **t <= 10.0)
            .map(|((_, x), o)| (x - o).abs())
            .fold(0.0, f64::max);
        ok &= r.status == SolveStatus::Converged && residual < 1e-4 && agreement < 1e-6;
        details.push(format!(
            "y={y0}: {:?} in {} iterations, residual {:.3e} at h = 1e-3 (< 1e-4), IVP agreement on [0, 10] {:.3e} (< 1e-6)",
            r.status, r.iterations, residual, agreement
        ));
    }
    check(ok, details.join("; "))
}

fn hypothesis_gate() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = r#"{
  "schema": 1,
  "kind": "difference",
  "problem": {
    "order": 1,
    "a": {"family": "geometric", "c": 1.0, "q": 0.5},
    "f": {"name": "constant", "c": 1.0},
    MARGIN
  }
}"#;
    let cases = [
        ("forcing bound", "\"margin\": 0.9", "weighted-forcing-bound"),
        (
            "framed interior",
            "\"margin\": 1.0, \"domain\": {\"lo\": -1.5, \"hi\": 1.5}, \"y\": {\"family\": \"constant\", \"c\": 1.0}",
            "approximant-in-framed-interior",
        ),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (label, margin, check_name) in cases {
        let cfg = dir.path().join(format!("{}.json", label.replace(' ', "_")));
        std::fs::write(&cfg, base.replace("MARGIN", margin)).map_err(|e| e.to_string())?;
        let out = dir.path().join(label.replace(' ', "_"));
        let status = Command::new(env!("CARGO_BIN_EXE_remop"))
            .args(["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?
            .status;
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let failed: Vec<String> = report["certificate"]["checks"]
            .as_array()
            .map(|cs| cs.iter().filter(|c| c["passed"] == false).map(|c| c["name"].as_str().unwrap_or("").to_string()).collect())
            .unwrap_or_default();
        let iterations = report["solve"]["iterations"].as_u64();
        let trace_rows = std::fs::read_to_string(Path::new(&out).join("trace.csv")).map_err(|e| e.to_string())?.lines().count() - 1;
        ok &= status.code() == Some(2) && iterations == Some(0) && trace_rows == 0 && failed == [check_name];
        details.push(format!("{label}: exit {:?}, {:?} iterations, failed {failed:?}", status.code(), iterations));
    }
    check(ok, details.join("; "))
}

fn strictly_decreasing_with_ratio(profile: &[f64]) -> (bool, f64) {
    let ratio = profile[profile.len() - 1] / profile[0];
    (profile.windows(2).all(|w| w[1] < w[0]) && ratio < 0.5, ratio)
}

fn decay_proxy() -> Outcome {
    let end = 1u64 << 16;
    let x = SequenceWindow::from_fn(1, end, |j| (j as f64).powi(-4)).unwrap();
    let input = RemainderInput::new(x, DecayEnvelope::power(1.0, 4.0).unwrap(), 1).map_err(|e| e.to_string())?;
    let discrete: Vec<f64> = (3..=10)
        .map(|i| {
            let n = 1u64 << i;
            rm_value(&input, n).map(|b| n as f64 * b.value.abs())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let f = EnvelopedFn::from_fn(|s: f64| s.powi(-4), DecayEnvelope::power(1.0, 4.0).unwrap(), 1.0, end as f64)
        .map_err(|e| e.to_string())?;
    let q = QuadratureConfig::default();
    let continuous: Vec<f64> = (3..=10)
        .map(|i| {
            let t = (1u64 << i) as f64;
            rm_cont(&f, 1, t, &q).map(|b| t * b.value.abs())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (d_ok, d_ratio) = strictly_decreasing_with_ratio(&discrete);
    let (c_ok, c_ratio) = strictly_decreasing_with_ratio(&continuous);
    check(
        d_ok && c_ok,
        format!("discrete final/initial {d_ratio:.3e}, continuous final/initial {c_ratio:.3e} (strictly decreasing, < 0.5)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("discrete inversion identity", discrete_inversion),
        ("discrete derivative ladder", discrete_ladder),
        ("geometric closed form", geometric_closed_form),
        ("continuous order swap", order_swap),
        ("exponential eigen-identity", eigen_identity),
        ("continuous derivative identities", continuous_derivatives),
        ("difference equation end-to-end", discrete_end_to_end),
        ("differential equation end-to-end", ode_end_to_end),
        ("hypothesis gate", hypothesis_gate),
        ("decay proxy", decay_proxy),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
