//! Composite trapezoid rule for vector-valued integrands, with step halving.

use crate::error::{Error, Result};

/// Relative tolerance between successive halvings.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Largest number of sub-intervals tried before giving up.
pub const MAX_STEPS: usize = 1 << 20;

/// Result of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub values: Vec<f64>,
    pub steps: usize,
    /// Largest relative change in the final halving.
    pub residual: f64,
}

/// Composite trapezoid with `n` equal sub-intervals. `f(u, out)` writes the
/// integrand at `u` into `out`. Reversed limits give the signed integral.
pub fn trapezoid<F>(f: F, dim: usize, a: f64, b: f64, n: usize) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]),
{
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut buf = vec![0.0; dim];
    let mut acc = vec![0.0; dim];
    f(a, &mut buf);
    add_scaled(&mut acc, &buf, 0.5);
    f(b, &mut buf);
    add_scaled(&mut acc, &buf, 0.5);
    for k in 1..n {
        f(a + k as f64 * h, &mut buf);
        add_scaled(&mut acc, &buf, 1.0);
    }
    acc.iter_mut().for_each(|v| *v *= h);
    acc
}

/// Trapezoid starting from `n0` sub-intervals and halving the step until two
/// successive estimates agree within `rel_tol` (relative to the integral of
/// `|f|`) or `max_steps` is exceeded.
pub fn adaptive_trapezoid<F>(
    f: F,
    dim: usize,
    a: f64,
    b: f64,
    n0: usize,
    rel_tol: f64,
    max_steps: usize,
) -> Result<Integral>
where
    F: Fn(f64, &mut [f64]),
{
    if a == b {
        return Ok(Integral {
            values: vec![0.0; dim],
            steps: 0,
            residual: 0.0,
        });
    }
    let mut n = n0.max(2);
    let mut h = (b - a) / n as f64;
    let mut buf = vec![0.0; dim];
    // Running sums of f and |f| over the nodes, endpoints weighted 1/2.
    let mut sum = vec![0.0; dim];
    let mut abs_sum = vec![0.0; dim];
    let mut visit = |u: f64, w: f64, sum: &mut [f64], abs_sum: &mut [f64]| {
        f(u, &mut buf);
        for ((s, t), v) in sum.iter_mut().zip(abs_sum.iter_mut()).zip(&buf) {
            *s += w * v;
            *t += w * v.abs();
        }
    };
    visit(a, 0.5, &mut sum, &mut abs_sum);
    visit(b, 0.5, &mut sum, &mut abs_sum);
    for k in 1..n {
        visit(a + k as f64 * h, 1.0, &mut sum, &mut abs_sum);
    }
    let mut estimate: Vec<f64> = sum.iter().map(|s| s * h).collect();
    let mut residual = f64::INFINITY;
    while n < max_steps {
        let half = 0.5 * h;
        for k in 0..n {
            visit(a + (2 * k + 1) as f64 * half, 1.0, &mut sum, &mut abs_sum);
        }
        n *= 2;
        h = half;
        let next: Vec<f64> = sum.iter().map(|s| s * h).collect();
        residual = next
            .iter()
            .zip(&estimate)
            .zip(&abs_sum)
            .map(|((new, old), abs)| {
                let scale = (abs * h.abs()).max(new.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (new - old).abs() / scale
                }
            })
            .fold(0.0, f64::max);
        estimate = next;
        if residual < rel_tol {
            return Ok(Integral {
                values: estimate,
                steps: n,
                residual,
            });
        }
    }
    Err(Error::QuadratureNonConvergence { residual, steps: n })
}

fn add_scaled(acc: &mut [f64], v: &[f64], w: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += w * b;
    }
}
