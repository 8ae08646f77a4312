//! Conjugate (Legendre–Fenchel) and penalty representations on grids.
//!
//! The extension `f(y) = ρ(Z_y)` of an illiquidity measure to all of `ℝ` is
//! sampled on a grid, conjugated exactly as a discrete point set, and
//! conjugated again to check recovery. The translation-invariant lift
//! `β̂(h, x) = f(h - x) + x` is checked for its Lipschitz constant, and the
//! dual representation `ρ(Z) = sup_Q {E_Q[-Z] - α(Q)}` is checked on finite
//! probability simplices.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::illiq::{block_risk, short_side_supported, split_risk, Asset, Risk};
use crate::impact::{offsetting_exposure, split_exposure, Quadrature};
use crate::riskmeasure::{avar_tail_measure, run_trials, RiskFunctional};
use crate::scenario::{expectation, ProbabilityVector, ScenarioVector};

/// Stand-in for `+∞` in conjugate values.
pub const INFINITE: f64 = f64::MAX;

/// Default number of conjugate points for a one-dimensional grid.
pub const U_POINTS_1D: usize = 1 << 12;

/// Default number of conjugate points per axis for multivariate grids.
pub const U_POINTS_ND: usize = 1 << 8;

/// Largest supported grid dimension.
pub const MAX_DIM: usize = 3;

/// Tolerance of the dual checks.
pub const DUAL_TOLERANCE: f64 = 1e-9;

pub fn is_infinite(v: f64) -> bool {
    v >= INFINITE
}

/// A function sampled on a tensor grid (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidParams(format!(
                "grid dimension {} is not in 1..={MAX_DIM}",
                axes.len()
            )));
        }
        for (k, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::EmptyGrid);
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput(format!("grid axis {k}")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParams(format!(
                    "grid axis {k} is not strictly increasing"
                )));
            }
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if values.len() != len {
            return Err(Error::InvalidParams(format!(
                "{} values for a grid of {len} points",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::NonFiniteInput("grid values".into()));
        }
        Ok(Self { axes, values })
    }

    pub fn one_d(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![grid], values)
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(axes: Vec<Vec<f64>>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let len: usize = shape.iter().product();
        let values = (0..len)
            .into_par_iter()
            .map(|flat| {
                let point: Vec<f64> = unravel(flat, &shape)
                    .iter()
                    .zip(&axes)
                    .map(|(&i, a)| a[i])
                    .collect();
                f(&point)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// The only axis of a one-dimensional grid.
    pub fn grid(&self) -> &[f64] {
        &self.axes[0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Multilinear interpolation at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::InvalidParams(format!(
                "point has {} coordinates, grid has {}",
                point.len(),
                self.dim()
            )));
        }
        // Per axis: lower node index and weight of the upper node.
        let mut cell = Vec::with_capacity(self.dim());
        for (&x, axis) in point.iter().zip(&self.axes) {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(x >= lo && x <= hi) {
                return Err(Error::OutOfGridSpan(x));
            }
            if axis.len() == 1 {
                cell.push((0, 0.0));
                continue;
            }
            let i = axis.partition_point(|&g| g <= x).clamp(1, axis.len() - 1) - 1;
            let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
            cell.push((i, t));
        }
        let shape = self.shape();
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim()) {
            let mut weight = 1.0;
            let mut idx = Vec::with_capacity(self.dim());
            for (k, &(i, t)) in cell.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    weight *= t;
                    idx.push((i + 1).min(shape[k] - 1));
                } else {
                    weight *= 1.0 - t;
                    idx.push(i);
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[ravel(&idx, &shape)];
            }
        }
        Ok(acc)
    }
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Which exposure generates `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitPolicy {
    Block,
    Split(Quadrature),
}

fn require_zero(grid: &[f64]) -> Result<()> {
    if grid.contains(&0.0) {
        Ok(())
    } else {
        Err(Error::InvalidParams("grid must contain 0".into()))
    }
}

/// Samples `f(y) = ρ(Z_y)` on a grid that contains 0 and may span negatives.
pub fn build_f(
    asset: &Asset,
    risk: &Risk,
    grid: &[f64],
    policy: ExitPolicy,
) -> Result<GridFunction> {
    require_zero(grid)?;
    GridFunction::from_fn(vec![grid.to_vec()], |y| match policy {
        ExitPolicy::Block => block_risk(asset, risk, y[0]),
        ExitPolicy::Split(q) => split_risk(asset, risk, y[0], q),
    })
}

/// Samples the short-side function `g(y) = ρ(-Z_y)` on a grid containing 0.
pub fn build_g(asset: &Asset, risk: &Risk, grid: &[f64]) -> Result<GridFunction> {
    require_zero(grid)?;
    if !short_side_supported(&asset.model, &risk.functional) {
        return Err(Error::UnsupportedModelForShortSide(
            asset.model.name().into(),
        ));
    }
    GridFunction::from_fn(vec![grid.to_vec()], |y| {
        risk.eval(
            &offsetting_exposure(&asset.model, &asset.x_tilde, y[0])?
                .z
                .negated(),
        )
    })
}

/// Samples `f(y⃗) = ρ(Σ_i Z^i_{y_i})` on a tensor grid, one axis per asset.
pub fn build_f_portfolio(
    assets: &[Asset],
    risk: &Risk,
    axes: &[Vec<f64>],
    policy: ExitPolicy,
) -> Result<GridFunction> {
    if assets.len() != axes.len() {
        return Err(Error::InvalidParams(format!(
            "{} axes for {} assets",
            axes.len(),
            assets.len()
        )));
    }
    for axis in axes {
        require_zero(axis)?;
    }
    GridFunction::from_fn(axes.to_vec(), |y| {
        let mut total: Option<ScenarioVector> = None;
        for (a, &v) in assets.iter().zip(y) {
            let z = match policy {
                ExitPolicy::Block => offsetting_exposure(&a.model, &a.x_tilde, v)?.z,
                ExitPolicy::Split(q) => split_exposure(&a.model, &a.x_tilde, v, q)?.z,
            };
            total = Some(match total {
                None => z,
                Some(t) => t.add(&z)?,
            });
        }
        risk.eval(&total.expect("at least one asset"))
    })
}

/// Lower convex hull of `(x_k, v_k)` with `x` increasing; sentinel values skipped.
fn lower_hull(x: &[f64], v: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for k in (0..x.len()).filter(|&k| !is_infinite(v[k])) {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or above the chord a–k
            let cross = (x[b] - x[a]) * (v[k] - v[a]) - (v[b] - v[a]) * (x[k] - x[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// `out[j] = max_k (t_j x_k - v_k)` for increasing `t`, exact on the point set.
fn legendre_line(x: &[f64], v: &[f64], t: &[f64], out: &mut [f64]) {
    let hull = lower_hull(x, v);
    if hull.is_empty() {
        out.iter_mut().for_each(|o| *o = INFINITE);
        return;
    }
    let mut j = 0;
    for (o, &u) in out.iter_mut().zip(t) {
        while j + 1 < hull.len() {
            let (a, b) = (hull[j], hull[j + 1]);
            let slope = (v[b] - v[a]) / (x[b] - x[a]);
            if slope <= u {
                j += 1;
            } else {
                break;
            }
        }
        let k = hull[j];
        *o = u * x[k] - v[k];
    }
}

/// `max_{x} (t·x - φ(x))` from the grid `from` onto the grid `to`, one axis
/// at a time.
fn transform(values: &[f64], from: &[Vec<f64>], to: &[Vec<f64>]) -> Vec<f64> {
    let dim = from.len();
    let mut shape: Vec<usize> = from.iter().map(Vec::len).collect();
    let mut cur = values.to_vec();
    for (step, axis) in (0..dim).rev().enumerate() {
        if step > 0 {
            for v in &mut cur {
                *v = -*v;
            }
        }
        let n_in = shape[axis];
        let n_out = to[axis].len();
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next = vec![0.0; outer * n_out * inner];
        next.par_chunks_mut(n_out * inner)
            .enumerate()
            .for_each(|(o, block)| {
                let mut line = vec![0.0; n_in];
                let mut res = vec![0.0; n_out];
                for i in 0..inner {
                    for (k, l) in line.iter_mut().enumerate() {
                        *l = cur[(o * n_in + k) * inner + i];
                    }
                    legendre_line(&from[axis], &line, &to[axis], &mut res);
                    for (k, r) in res.iter().enumerate() {
                        block[k * inner + i] = *r;
                    }
                }
            });
        shape[axis] = n_out;
        cur = next;
    }
    cur
}

/// Finite-difference slopes of `f` along `axis`, sentinel entries skipped.
fn axis_slopes(f: &GridFunction, axis: usize) -> Vec<f64> {
    let shape = f.shape();
    let grid = &f.axes[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut slopes = Vec::new();
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| f.values[(o * shape[axis] + k) * inner + i];
            for k in 1..shape[axis] {
                let (a, b) = (at(k - 1), at(k));
                if !is_infinite(a) && !is_infinite(b) {
                    slopes.push((b - a) / (grid[k] - grid[k - 1]));
                }
            }
        }
    }
    slopes
}

/// Conjugate variable grid: `u_points` evenly spaced over the slope range
/// widened by 1 on each side, plus the slopes themselves when they fit.
fn u_axis(slopes: &[f64], u_points: usize) -> Vec<f64> {
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| {
            (l.min(s), h.max(s))
        });
    let (lo, hi) = if slopes.is_empty() {
        (0.0, 0.0)
    } else {
        (lo, hi)
    };
    let mut u = linspace(lo - 1.0, hi + 1.0, u_points.max(2));
    let mut distinct = slopes.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= u_points {
        u.extend(distinct);
        u.sort_by(f64::total_cmp);
        u.dedup();
    }
    u
}

/// `f*(u) = max_y (u·y - f(y))` with the default number of conjugate points.
pub fn conjugate(f: &GridFunction) -> Result<GridFunction> {
    let points = if f.dim() == 1 {
        U_POINTS_1D
    } else {
        U_POINTS_ND
    };
    conjugate_with(f, points)
}

/// [`conjugate`] with `u_points` conjugate points per axis.
///
/// In one dimension, conjugate values outside the range of finite-difference
/// slopes of `f` are set to [`INFINITE`], which is where the conjugate of the
/// underlying function on `ℝ` is infinite when `f` is convex.
pub fn conjugate_with(f: &GridFunction, u_points: usize) -> Result<GridFunction> {
    if f.values.iter().all(|v| is_infinite(*v)) {
        return Err(Error::EmptyGrid);
    }
    let slopes: Vec<Vec<f64>> = (0..f.dim()).map(|k| axis_slopes(f, k)).collect();
    let u_axes: Vec<Vec<f64>> = slopes.iter().map(|s| u_axis(s, u_points)).collect();
    let mut values = transform(&f.values, &f.axes, &u_axes);
    if f.dim() == 1 && !slopes[0].is_empty() {
        let (lo, hi) = slopes[0]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| {
                (l.min(s), h.max(s))
            });
        for (v, &u) in values.iter_mut().zip(&u_axes[0]) {
            if u < lo || u > hi {
                *v = INFINITE;
            }
        }
    }
    GridFunction::new(u_axes, values)
}

/// `max_y (u·y - f(y))` on caller-chosen conjugate axes, without sentinels.
pub fn conjugate_on(f: &GridFunction, u_axes: Vec<Vec<f64>>) -> Result<GridFunction> {
    if u_axes.len() != f.dim() {
        return Err(Error::InvalidParams(
            "one conjugate axis per grid axis".into(),
        ));
    }
    if f.values.iter().all(|v| is_infinite(*v)) {
        return Err(Error::EmptyGrid);
    }
    let values = transform(&f.values, &f.axes, &u_axes);
    GridFunction::new(u_axes, values)
}

/// `sup_u (u·y - f*(u))` at an arbitrary point, sentinel values skipped.
pub fn dual_value(f_star: &GridFunction, y: &[f64]) -> f64 {
    let shape = f_star.shape();
    (0..f_star.values.len())
        .filter(|&k| !is_infinite(f_star.values[k]))
        .map(|k| {
            let idx = unravel(k, &shape);
            let dot: f64 = idx
                .iter()
                .zip(&f_star.axes)
                .zip(y)
                .map(|((&i, a), &v)| a[i] * v)
                .sum();
            dot - f_star.values[k]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A function with its conjugate and biconjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePair {
    pub f: GridFunction,
    pub f_star: GridFunction,
    /// Biconjugate on the grid of `f`.
    pub f_star_star: GridFunction,
    /// `max |f** - f|` over interior grid points.
    pub max_recovery_error: f64,
    /// `2 C h` with `C` the largest `|y|` or finite-valued `|u|` and `h` the
    /// largest grid step.
    pub error_bound: f64,
    /// Whether `f` passed the slope test along every axis.
    pub convex: bool,
}

/// Conjugates `f` twice and measures the recovery error.
pub fn biconjugate_check(f: &GridFunction) -> Result<ConjugatePair> {
    let f_star = conjugate(f)?;
    biconjugate_from(f, f_star)
}

/// [`biconjugate_check`] with `u_points` conjugate points per axis.
pub fn biconjugate_check_with(f: &GridFunction, u_points: usize) -> Result<ConjugatePair> {
    let f_star = conjugate_with(f, u_points)?;
    biconjugate_from(f, f_star)
}

fn biconjugate_from(f: &GridFunction, f_star: GridFunction) -> Result<ConjugatePair> {
    let back = transform(&f_star.values, &f_star.axes, &f.axes);
    let f_star_star = GridFunction::new(f.axes.clone(), back)?;
    let shape = f.shape();
    let interior = |idx: &[usize]| {
        idx.iter()
            .zip(&shape)
            .all(|(&i, &n)| n <= 2 || (i > 0 && i + 1 < n))
    };
    let max_recovery_error = (0..f.values.len())
        .filter(|&k| interior(&unravel(k, &shape)))
        .map(|k| (f_star_star.values[k] - f.values[k]).abs())
        .fold(0.0, f64::max);
    let span = |axes: &[Vec<f64>]| {
        axes.iter()
            .flat_map(|a| [a[0].abs(), a[a.len() - 1].abs()])
            .fold(0.0, f64::max)
    };
    // largest |u| among finite conjugate values
    let u_span = if f.dim() == 1 {
        f_star
            .grid()
            .iter()
            .zip(&f_star.values)
            .filter(|(_, v)| !is_infinite(**v))
            .map(|(u, _)| u.abs())
            .fold(0.0, f64::max)
    } else {
        span(&f_star.axes)
    };
    let step = |axes: &[Vec<f64>]| {
        axes.iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    };
    let c = span(&f.axes).max(u_span);
    // In one dimension every slope of f is a conjugate node, so only the
    // y-step enters; coarser multivariate u-grids add their own step.
    let h = if f.dim() == 1 {
        step(&f.axes)
    } else {
        step(&f.axes).max(step(&f_star.axes))
    };
    let convex = (0..f.dim()).all(|k| axis_convex(f, k));
    Ok(ConjugatePair {
        f: f.clone(),
        f_star,
        f_star_star,
        max_recovery_error,
        error_bound: 2.0 * c * h,
        convex,
    })
}

/// Non-decreasing finite-difference slopes along `axis`, up to rounding.
fn axis_convex(f: &GridFunction, axis: usize) -> bool {
    let shape = f.shape();
    let grid = &f.axes[axis];
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| f.values[(o * n + k) * inner + i];
            for k in 2..n {
                let s0 = (at(k - 1) - at(k - 2)) / (grid[k - 1] - grid[k - 2]);
                let s1 = (at(k) - at(k - 1)) / (grid[k] - grid[k - 1]);
                let scale = 1.0 + s0.abs().max(s1.abs());
                if s1 < s0 - 1e-9 * scale {
                    return false;
                }
            }
        }
    }
    true
}

/// Side of the translation-invariant lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `β̂(h, x) = f(h - x) + Σ x_i`.
    Long,
    /// `δ̂(h, x) = g(h - x) - Σ x_i`.
    Short,
}

/// Evaluates the lift at `(h, x)`, interpolating `f` between grid nodes.
pub fn beta_hat(f: &GridFunction, h: &[f64], x: &[f64], side: Side) -> Result<f64> {
    if h.len() != f.dim() || x.len() != f.dim() {
        return Err(Error::InvalidParams(
            "h and x must match the grid dimension".into(),
        ));
    }
    let z: Vec<f64> = h.iter().zip(x).map(|(a, b)| a - b).collect();
    let shift: f64 = x.iter().sum();
    let v = f.eval(&z)?;
    Ok(match side {
        Side::Long => v + shift,
        Side::Short => v - shift,
    })
}

/// Outcome of [`lipschitz_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub dimension: usize,
    pub pairs: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Largest `|β̂(p) - β̂(q)| / |p - q|` over `trials` seeded random pairs, with
/// `p = (h, x)` and `h - x` inside the grid span. Passes iff it is at most `√(2n)`.
pub fn lipschitz_check(f: &GridFunction, trials: usize, seed: u64) -> Result<LipschitzReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    let n = f.dim();
    let width = f
        .axes
        .iter()
        .map(|a| a[a.len() - 1] - a[0])
        .fold(0.0, f64::max)
        .max(1.0);
    let ratios = run_trials(seed, trials, |_, c| -> Result<f64> {
        let mut point = || -> (Vec<f64>, Vec<f64>) {
            let z: Vec<f64> = f
                .axes
                .iter()
                .map(|a| c.range(a[0], a[a.len() - 1]))
                .collect();
            let x: Vec<f64> = (0..n).map(|_| c.range(-width, width)).collect();
            let h = z.iter().zip(&x).map(|(a, b)| a + b).collect();
            (h, x)
        };
        let (h1, x1) = point();
        let (h2, x2) = point();
        let b1 = beta_hat(f, &h1, &x1, Side::Long)?;
        let b2 = beta_hat(f, &h2, &x2, Side::Long)?;
        let dist = h1
            .iter()
            .zip(&h2)
            .chain(x1.iter().zip(&x2))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(if dist > 0.0 {
            (b1 - b2).abs() / dist
        } else {
            0.0
        })
    });
    let mut max_ratio: f64 = 0.0;
    for r in ratios {
        max_ratio = max_ratio.max(r?);
    }
    let bound = (2.0 * n as f64).sqrt();
    Ok(LipschitzReport {
        dimension: n,
        pairs: trials,
        max_ratio,
        bound,
        passed: max_ratio <= bound + 1e-9,
    })
}

/// Value of a penalty function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PenaltyValue {
    Exact(f64),
    Infinite,
    /// Supremum over a probe set only; the true penalty may be larger.
    LowerBound(f64),
}

impl PenaltyValue {
    /// Numeric value with `+∞` for [`PenaltyValue::Infinite`].
    pub fn value(&self) -> f64 {
        match *self {
            PenaltyValue::Exact(v) | PenaltyValue::LowerBound(v) => v,
            PenaltyValue::Infinite => f64::INFINITY,
        }
    }
}

/// `α(Q)` for one measure `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyEvaluation {
    pub q: Vec<f64>,
    pub alpha: PenaltyValue,
}

/// Minimal penalty `α(Q) = sup_Z {E_Q[-Z] - ρ(Z)}`: closed form for the worst
/// case, AVaR and entropic functionals, probe-set lower bound otherwise.
pub fn penalty_alpha(
    functional: &RiskFunctional,
    p: Option<&ProbabilityVector>,
    q: &ProbabilityVector,
    probes: &[ScenarioVector],
) -> Result<PenaltyEvaluation> {
    functional.validate()?;
    let qw = q.weights();
    let absolutely_continuous = |p: &ProbabilityVector| -> Result<()> {
        if p.space() != q.space() || p.len() != q.len() {
            return Err(Error::SpaceMismatch(
                "Q and P live on different spaces".into(),
            ));
        }
        match qw
            .iter()
            .zip(p.weights())
            .position(|(&qi, &pi)| qi > 0.0 && pi == 0.0)
        {
            Some(index) => Err(Error::AbsoluteContinuityViolation {
                index,
                mass: qw[index],
            }),
            None => Ok(()),
        }
    };
    let alpha = match *functional {
        RiskFunctional::WorstCase => PenaltyValue::Exact(0.0),
        RiskFunctional::Avar { delta } => {
            let p = p.ok_or_else(|| Error::MissingProbability(functional.name()))?;
            absolutely_continuous(p)?;
            let within = qw
                .iter()
                .zip(p.weights())
                .all(|(&qi, &pi)| qi * delta <= pi * (1.0 + 1e-12) + 1e-15);
            if within {
                PenaltyValue::Exact(0.0)
            } else {
                PenaltyValue::Infinite
            }
        }
        RiskFunctional::Entropic { lambda } => {
            let p = p.ok_or_else(|| Error::MissingProbability(functional.name()))?;
            absolutely_continuous(p)?;
            let kl: f64 = qw
                .iter()
                .zip(p.weights())
                .filter(|(&qi, _)| qi > 0.0)
                .map(|(&qi, &pi)| qi * (qi / pi).ln())
                .sum();
            PenaltyValue::Exact(kl.max(0.0) / lambda)
        }
        RiskFunctional::Var { .. } => {
            if probes.is_empty() {
                return Err(Error::InvalidParams(
                    "a non-empty probe set is needed without a closed-form penalty".into(),
                ));
            }
            let mut best = f64::NEG_INFINITY;
            for z in probes {
                let r = crate::riskmeasure::rho(functional, z, p)?;
                best = best.max(-expectation(q, z)? - r);
            }
            PenaltyValue::LowerBound(best)
        }
    };
    Ok(PenaltyEvaluation {
        q: qw.to_vec(),
        alpha,
    })
}

/// Outcome of [`dual_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport {
    pub y: f64,
    pub beta: f64,
    /// Largest `E_Q[-Z_y] - α(Q)` over vertices, the known maximizer and the samples.
    pub dual_sup: f64,
    pub gap: f64,
    pub maximizer: Vec<f64>,
    pub maximizer_value: f64,
    pub samples: usize,
    /// Largest `E_Q[-Z_y] - α(Q) - β(y)` over the random samples.
    pub max_sample_excess: f64,
    pub passed: bool,
}

/// Maximizer of the dual representation for the closed-form functionals.
pub fn dual_maximizer(
    functional: &RiskFunctional,
    z: &ScenarioVector,
    p: Option<&ProbabilityVector>,
) -> Result<Vec<f64>> {
    let zv = z.values();
    match *functional {
        RiskFunctional::WorstCase => {
            let mut q = vec![0.0; zv.len()];
            let argmin = (0..zv.len())
                .min_by(|&a, &b| zv[a].total_cmp(&zv[b]))
                .ok_or(Error::EmptyGrid)?;
            q[argmin] = 1.0;
            Ok(q)
        }
        RiskFunctional::Avar { delta } => {
            let p = p.ok_or_else(|| Error::MissingProbability(functional.name()))?;
            Ok(avar_tail_measure(zv, p.weights(), delta))
        }
        RiskFunctional::Entropic { lambda } => {
            let p = p.ok_or_else(|| Error::MissingProbability(functional.name()))?;
            let shift = zv
                .iter()
                .zip(p.weights())
                .filter(|(_, &w)| w > 0.0)
                .map(|(&v, _)| -lambda * v)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut q: Vec<f64> = zv
                .iter()
                .zip(p.weights())
                .map(|(&v, &w)| w * (-lambda * v - shift).exp())
                .collect();
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= total);
            Ok(q)
        }
        RiskFunctional::Var { .. } => Err(Error::InvalidParams(
            "no closed-form dual maximizer for VaR".into(),
        )),
    }
}

fn normalized(
    space_of: &ScenarioVector,
    risk: &Risk,
    mut w: Vec<f64>,
) -> Result<ProbabilityVector> {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let _ = risk;
    ProbabilityVector::on_space(space_of.space(), w)
}

/// Checks `β(y) = sup_Q {E_Q[-Z_y] - α(Q)}` with the closed-form penalty,
/// and that `n_samples` random `Q` never exceed `β(y)`.
pub fn dual_check(
    asset: &Asset,
    risk: &Risk,
    y: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DualReport> {
    let z = offsetting_exposure(&asset.model, &asset.x_tilde, y)?.z;
    let beta = risk.eval(&z)?;
    let p = risk.probability.as_ref();
    let n = z.len();
    let value = |w: Vec<f64>| -> Result<f64> {
        let q = normalized(&z, risk, w)?;
        match penalty_alpha(&risk.functional, p, &q, &[]) {
            Ok(PenaltyEvaluation { alpha, .. }) => Ok(-expectation(&q, &z)? - alpha.value()),
            Err(Error::AbsoluteContinuityViolation { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let maximizer = dual_maximizer(&risk.functional, &z, p)?;
    let maximizer_value = value(maximizer.clone())?;
    let mut dual_sup = maximizer_value;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dual_sup = dual_sup.max(value(e)?);
    }
    let support: Vec<usize> = match p {
        Some(p) => (0..n).filter(|&i| p.weights()[i] > 0.0).collect(),
        None => (0..n).collect(),
    };
    let draws = run_trials(seed, n_samples, |_, c| {
        let s = c.simplex(support.len());
        let mut w = vec![0.0; n];
        for (&i, v) in support.iter().zip(s) {
            w[i] = v;
        }
        value(w)
    });
    let mut max_sample_excess = f64::NEG_INFINITY;
    for d in draws {
        let d = d?;
        dual_sup = dual_sup.max(d);
        max_sample_excess = max_sample_excess.max(d - beta);
    }
    let gap = (dual_sup - beta).abs();
    Ok(DualReport {
        y,
        beta,
        dual_sup,
        gap,
        maximizer,
        maximizer_value,
        samples: n_samples,
        max_sample_excess,
        passed: gap <= DUAL_TOLERANCE && max_sample_excess <= DUAL_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impact::ImpactModel;
    use crate::scenario::ScenarioSpace;

    fn linear_asset() -> (ScenarioSpace, Asset) {
        let s = ScenarioSpace::uniform(3).unwrap();
        let x = s.vector(vec![80.0, 90.0, 100.0]).unwrap();
        (
            s,
            Asset::new("x", ImpactModel::LinearAdditive { a: 0.5 }, x).unwrap(),
        )
    }

    fn worst() -> Risk {
        Risk::new(RiskFunctional::WorstCase, None).unwrap()
    }

    #[test]
    fn build_f_is_affine_for_linear_worst_case() {
        let (_, asset) = linear_asset();
        let grid = linspace(-20.0, 20.0, 41);
        let f = build_f(&asset, &worst(), &grid, ExitPolicy::Block).unwrap();
        for (y, v) in f.grid().iter().zip(f.values()) {
            assert!((v - (-80.0 + 0.5 * y)).abs() < 1e-12);
        }
        assert_eq!(f.eval(&[0.0]).unwrap(), -80.0);
        assert!(build_f(&asset, &worst(), &[1.0, 2.0], ExitPolicy::Block).is_err());
    }

    #[test]
    fn conjugate_of_square() {
        let grid = linspace(-10.0, 10.0, 2001);
        let vals = grid.iter().map(|y| y * y).collect();
        let f = GridFunction::one_d(grid, vals).unwrap();
        let fs = conjugate(&f).unwrap();
        let dy = 0.01;
        for (u, v) in fs.grid().iter().zip(fs.values()) {
            if !is_infinite(*v) {
                assert!((v - u * u / 4.0).abs() <= u.abs().max(1.0) * dy, "{u} {v}");
            }
        }
    }

    #[test]
    fn conjugate_of_affine() {
        let grid = linspace(-20.0, 20.0, 81);
        let vals = grid.iter().map(|y| -80.0 + 0.5 * y).collect();
        let f = GridFunction::one_d(grid, vals).unwrap();
        let fs = conjugate(&f).unwrap();
        let finite: Vec<(f64, f64)> = fs
            .grid()
            .iter()
            .zip(fs.values())
            .filter(|(_, v)| !is_infinite(**v))
            .map(|(u, v)| (*u, *v))
            .collect();
        assert_eq!(finite.len(), 1);
        assert_eq!(finite[0].0, 0.5);
        assert!((finite[0].1 - 80.0).abs() < 1e-12);
        let pair = biconjugate_check(&f).unwrap();
        assert!(pair.max_recovery_error <= 1e-9);
        assert!(pair.convex);
    }

    #[test]
    fn conjugate_of_split_quadratic() {
        let grid = linspace(-100.0, 100.0, 401);
        let vals = grid.iter().map(|y| -80.0 * y + 0.25 * y * y).collect();
        let f = GridFunction::one_d(grid, vals).unwrap();
        let fs = conjugate(&f).unwrap();
        for (u, v) in fs.grid().iter().zip(fs.values()) {
            if !is_infinite(*v) {
                let exact = (u + 80.0).powi(2);
                assert!(v <= &(exact + 1e-9));
                assert!(exact - v <= 0.5 * 0.5 * 0.25 + 1e-9, "{u}");
            }
        }
        let pair = biconjugate_check(&f).unwrap();
        assert!(pair.max_recovery_error <= pair.error_bound);
    }

    #[test]
    fn nonconvex_input_is_flagged() {
        let s = ScenarioSpace::uniform(1).unwrap();
        let asset = Asset::new(
            "p",
            ImpactModel::PowerLaw {
                gamma: 2.0,
                alpha: 0.5,
            },
            s.vector(vec![100.0]).unwrap(),
        )
        .unwrap();
        let f = build_f(
            &asset,
            &worst(),
            &linspace(-50.0, 50.0, 101),
            ExitPolicy::Block,
        )
        .unwrap();
        let pair = biconjugate_check(&f).unwrap();
        assert!(!pair.convex);
        let below = pair
            .f_star_star
            .values()
            .iter()
            .zip(f.values())
            .any(|(a, b)| a < &(b - 1e-6));
        assert!(below);
        assert!(pair
            .f_star_star
            .values()
            .iter()
            .zip(f.values())
            .all(|(a, b)| *a <= b + 1e-9));
    }

    #[test]
    fn multivariate_conjugate_matches_separable_sum() {
        let g = linspace(-4.0, 4.0, 33);
        let f = GridFunction::from_fn(vec![g.clone(), g.clone()], |y| {
            Ok(y[0] * y[0] + 0.5 * y[1] * y[1])
        })
        .unwrap();
        let pair = biconjugate_check(&f).unwrap();
        assert!(pair.convex);
        assert!(pair.max_recovery_error <= pair.error_bound);
        let fs = &pair.f_star;
        for (i, u1) in fs.axes()[0].iter().enumerate().step_by(37) {
            for (j, u2) in fs.axes()[1].iter().enumerate().step_by(41) {
                let v = fs.values()[i * fs.axes()[1].len() + j];
                let exact = u1 * u1 / 4.0 + u2 * u2 / 2.0;
                // conjugate restricted to the grid never exceeds the true one
                assert!(v <= exact + 1e-9);
            }
        }
    }

    #[test]
    fn beta_hat_examples() {
        let grid = linspace(-20.0, 20.0, 41);
        let vals = grid.iter().map(|y| -80.0 + 0.5 * y).collect();
        let f = GridFunction::one_d(grid, vals).unwrap();
        assert!((beta_hat(&f, &[5.0], &[2.0], Side::Long).unwrap() + 76.5).abs() < 1e-12);
        assert_eq!(
            beta_hat(&f, &[7.0], &[0.0], Side::Long).unwrap(),
            f.eval(&[7.0]).unwrap()
        );
        let a = beta_hat(&f, &[3.0], &[1.0], Side::Long).unwrap();
        let b = beta_hat(&f, &[5.0], &[3.0], Side::Long).unwrap();
        assert!((b - a - 2.0).abs() < 1e-12);
        assert!(matches!(
            beta_hat(&f, &[50.0], &[0.0], Side::Long),
            Err(Error::OutOfGridSpan(_))
        ));
        assert!((beta_hat(&f, &[5.0], &[2.0], Side::Short).unwrap() - (-78.5 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_examples() {
        let grid = linspace(-20.0, 20.0, 41);
        let affine =
            GridFunction::one_d(grid.clone(), grid.iter().map(|y| -80.0 + 0.5 * y).collect())
                .unwrap();
        let r = lipschitz_check(&affine, 2000, 1).unwrap();
        assert!(r.passed && r.max_ratio <= 2.0_f64.sqrt());
        let flat = GridFunction::one_d(grid.clone(), vec![3.0; 41]).unwrap();
        let r = lipschitz_check(&flat, 2000, 1).unwrap();
        // sup is 1, approached when h barely moves
        assert!(r.max_ratio <= 1.0 + 1e-12 && r.max_ratio > 0.9);
    }

    #[test]
    fn penalty_examples() {
        let s = ScenarioSpace::uniform(2).unwrap();
        let p = s.probability();
        let q = s.probability_vector(vec![1.0, 0.0]).unwrap();
        let e = penalty_alpha(&RiskFunctional::Entropic { lambda: 1.0 }, p, &q, &[]).unwrap();
        assert!((e.alpha.value() - 2.0_f64.ln()).abs() < 1e-15);
        let w = penalty_alpha(&RiskFunctional::WorstCase, None, &q, &[]).unwrap();
        assert_eq!(w.alpha, PenaltyValue::Exact(0.0));
        let a = penalty_alpha(&RiskFunctional::Avar { delta: 0.75 }, p, &q, &[]).unwrap();
        assert_eq!(a.alpha, PenaltyValue::Infinite);
        let a = penalty_alpha(&RiskFunctional::Avar { delta: 0.5 }, p, &q, &[]).unwrap();
        assert_eq!(a.alpha, PenaltyValue::Exact(0.0));
        for f in [
            RiskFunctional::WorstCase,
            RiskFunctional::Avar { delta: 0.1 },
            RiskFunctional::Entropic { lambda: 3.0 },
        ] {
            let at_p = penalty_alpha(&f, p, p.unwrap(), &[]).unwrap();
            assert_eq!(at_p.alpha.value(), 0.0);
        }
        let probes = [s.vector(vec![1.0, -2.0]).unwrap()];
        let v = penalty_alpha(&RiskFunctional::Var { delta: 0.3 }, p, &q, &probes).unwrap();
        assert!(matches!(v.alpha, PenaltyValue::LowerBound(_)));
        assert!(penalty_alpha(&RiskFunctional::Var { delta: 0.3 }, p, &q, &[]).is_err());
    }

    #[test]
    fn penalty_requires_absolute_continuity() {
        let s = ScenarioSpace::new(vec!["a".into(), "b".into()], Some(vec![1.0, 0.0])).unwrap();
        let q = s.probability_vector(vec![0.5, 0.5]).unwrap();
        let r = penalty_alpha(
            &RiskFunctional::Entropic { lambda: 1.0 },
            s.probability(),
            &q,
            &[],
        );
        assert!(matches!(
            r,
            Err(Error::AbsoluteContinuityViolation { index: 1, .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let (s, asset) = linear_asset();
        let r = dual_check(&asset, &worst(), 10.0, 200, 5).unwrap();
        assert_eq!(r.beta, -75.0);
        assert_eq!(r.maximizer, vec![1.0, 0.0, 0.0]);
        assert!(r.passed, "{r:?}");
        for f in [
            RiskFunctional::Entropic { lambda: 1.0 },
            RiskFunctional::Avar { delta: 1.0 / 3.0 },
        ] {
            let risk = Risk::on(f, &s).unwrap();
            let r = dual_check(&asset, &risk, 10.0, 200, 5).unwrap();
            assert!(r.passed, "{f:?} {r:?}");
        }
        let risk = Risk::on(RiskFunctional::Avar { delta: 1.0 / 3.0 }, &s).unwrap();
        let r = dual_check(&asset, &risk, 10.0, 10, 5).unwrap();
        assert!((r.maximizer[0] - 1.0).abs() < 1e-12);
    }
}
