//! Price-impact families and the exposures they induce.
//!
//! An [`ImpactModel`] maps the unaffected horizon price `X̃(w)` and a signed
//! order size `y` to the impacted price `X(w, y)`. Unwinding a long position
//! of size `y` at the horizon realises the block exposure `Z_y = X(w, -y)`;
//! selling it in infinitesimal child orders realises the split exposure
//! `∫_0^y X(w, -u) du`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_trapezoid, DEFAULT_REL_TOL, MAX_STEPS};
use crate::scenario::{ScenarioSpace, ScenarioVector};

/// Tolerance used by [`check_concavity`] when none is given.
pub const CONCAVITY_TOLERANCE: f64 = 1e-9;

/// Concave increasing shape `s` with `s(0) = 0`, used by the separable models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ImpactShape {
    /// `slope * y`.
    Linear { slope: f64 },
    /// `scale * (sqrt(1 + y) - 1)` for `y >= 0`, continued by its tangent `scale * y / 2` below 0.
    Sqrt { scale: f64 },
    /// `scale * ln(1 + y)` for `y >= 0`, continued by its tangent `scale * y` below 0.
    Log { scale: f64 },
}

impl ImpactShape {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            ImpactShape::Linear { slope } => slope * y,
            ImpactShape::Sqrt { scale } => {
                if y >= 0.0 {
                    scale * ((1.0 + y).sqrt() - 1.0)
                } else {
                    0.5 * scale * y
                }
            }
            ImpactShape::Log { scale } => {
                if y >= 0.0 {
                    scale * y.ln_1p()
                } else {
                    scale * y
                }
            }
        }
    }

    fn parameter(&self) -> f64 {
        match *self {
            ImpactShape::Linear { slope } => slope,
            ImpactShape::Sqrt { scale } | ImpactShape::Log { scale } => scale,
        }
    }
}

/// Parametric impact families `X(w, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpactModel {
    /// `X̃ + a y`.
    LinearAdditive { a: f64 },
    /// `X̃ + M(w) y` with a scenario-dependent slope.
    StochasticSlope { slope: ScenarioVector },
    /// `X̃ + θ sgn(y) + η y`.
    SignLinear { theta: f64, eta: f64 },
    /// `X̃ ± γ |y|^α`, sign following `y`.
    PowerLaw { gamma: f64, alpha: f64 },
    /// `exp(a y T) X̃`.
    ExponentialMultiplicative { a: f64, horizon: f64 },
    /// `X̃ + h(y)`.
    SeparableAdditive { h: ImpactShape },
    /// `(1 + h(y)) X̃`.
    SeparableMultiplicative { h: ImpactShape },
}

impl ImpactModel {
    pub fn name(&self) -> &'static str {
        match self {
            ImpactModel::LinearAdditive { .. } => "linear",
            ImpactModel::StochasticSlope { .. } => "stochastic_slope",
            ImpactModel::SignLinear { .. } => "sign_linear",
            ImpactModel::PowerLaw { .. } => "power_law",
            ImpactModel::ExponentialMultiplicative { .. } => "exponential",
            ImpactModel::SeparableAdditive { .. } => "separable_additive",
            ImpactModel::SeparableMultiplicative { .. } => "separable_multiplicative",
        }
    }

    /// Structural validation. Sign conventions (increasing impact) are not
    /// enforced here; [`check_assumption1`] reports them numerically.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        match self {
            ImpactModel::LinearAdditive { a } if !a.is_finite() => bad("a must be finite".into()),
            ImpactModel::SignLinear { theta, eta } if !(theta.is_finite() && eta.is_finite()) => {
                bad("theta and eta must be finite".into())
            }
            ImpactModel::PowerLaw { gamma, alpha } => {
                if !gamma.is_finite() {
                    bad("gamma must be finite".into())
                } else if !(*alpha > 0.0 && *alpha < 1.0) {
                    bad(format!("alpha = {alpha} must lie in (0, 1)"))
                } else {
                    Ok(())
                }
            }
            ImpactModel::ExponentialMultiplicative { a, horizon } => {
                if !a.is_finite() {
                    bad("a must be finite".into())
                } else if !(*horizon > 0.0 && horizon.is_finite()) {
                    bad(format!("horizon = {horizon} must be > 0"))
                } else {
                    Ok(())
                }
            }
            ImpactModel::SeparableAdditive { h } | ImpactModel::SeparableMultiplicative { h }
                if !h.parameter().is_finite() =>
            {
                bad("shape parameter must be finite".into())
            }
            _ => Ok(()),
        }
    }

    /// Deterministic additive perturbation `h(y)` when the model has the form `X̃ + h(y)`.
    pub fn additive_shift(&self, y: f64) -> Option<f64> {
        match *self {
            ImpactModel::LinearAdditive { a } => Some(a * y),
            ImpactModel::SignLinear { theta, eta } => Some(theta * sign(y) + eta * y),
            ImpactModel::PowerLaw { gamma, alpha } => Some(sign(y) * gamma * y.abs().powf(alpha)),
            ImpactModel::SeparableAdditive { h } => Some(h.eval(y)),
            _ => None,
        }
    }

    /// Deterministic factor `h(y)` when the model has the form `h(y) X̃`.
    pub fn multiplicative_factor(&self, y: f64) -> Option<f64> {
        match *self {
            ImpactModel::ExponentialMultiplicative { a, horizon } => Some((a * y * horizon).exp()),
            ImpactModel::SeparableMultiplicative { h } => Some(1.0 + h.eval(y)),
            _ => None,
        }
    }

    fn check_slope_space(&self, x_tilde: &ScenarioVector) -> Result<()> {
        if let ImpactModel::StochasticSlope { slope } = self {
            slope.ensure_same_space(x_tilde)?;
        }
        Ok(())
    }
}

/// `sgn` with `sgn(0) = 0`.
fn sign(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Serializable model description, e.g. `{"kind":"linear","a":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpactSpec {
    Linear {
        a: f64,
    },
    StochasticSlope {
        /// Per-scenario slopes `M(w)`, in scenario order.
        slope: Vec<f64>,
    },
    SignLinear {
        theta: f64,
        eta: f64,
    },
    PowerLaw {
        gamma: f64,
        alpha: f64,
    },
    Exponential {
        a: f64,
        #[serde(alias = "T")]
        horizon: f64,
    },
    SeparableAdditive {
        h: ImpactShape,
    },
    SeparableMultiplicative {
        h: ImpactShape,
    },
}

impl ImpactSpec {
    /// Builds the model on `space` (needed for scenario-dependent slopes).
    pub fn build(&self, space: &ScenarioSpace) -> Result<ImpactModel> {
        let model = match self {
            ImpactSpec::Linear { a } => ImpactModel::LinearAdditive { a: *a },
            ImpactSpec::StochasticSlope { slope } => ImpactModel::StochasticSlope {
                slope: space.vector(slope.clone())?,
            },
            ImpactSpec::SignLinear { theta, eta } => ImpactModel::SignLinear {
                theta: *theta,
                eta: *eta,
            },
            ImpactSpec::PowerLaw { gamma, alpha } => ImpactModel::PowerLaw {
                gamma: *gamma,
                alpha: *alpha,
            },
            ImpactSpec::Exponential { a, horizon } => ImpactModel::ExponentialMultiplicative {
                a: *a,
                horizon: *horizon,
            },
            ImpactSpec::SeparableAdditive { h } => ImpactModel::SeparableAdditive { h: *h },
            ImpactSpec::SeparableMultiplicative { h } => {
                ImpactModel::SeparableMultiplicative { h: *h }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

/// `X(w, y)` for every scenario. `y = 0` returns `x_tilde` unchanged.
pub fn price_at(model: &ImpactModel, x_tilde: &ScenarioVector, y: f64) -> Result<ScenarioVector> {
    model.validate()?;
    model.check_slope_space(x_tilde)?;
    if !y.is_finite() {
        return Err(Error::NonFiniteInput(format!("order size {y}")));
    }
    if y == 0.0 {
        return Ok(x_tilde.clone());
    }
    evaluate(model, x_tilde, y)
}

fn evaluate(model: &ImpactModel, x_tilde: &ScenarioVector, y: f64) -> Result<ScenarioVector> {
    if let ImpactModel::StochasticSlope { slope } = model {
        return x_tilde.zip_map(slope, |x, m| x + m * y);
    }
    if let Some(shift) = model.additive_shift(y) {
        return x_tilde.shifted(shift);
    }
    let factor = model
        .multiplicative_factor(y)
        .expect("every model is additive, multiplicative or stochastic-slope");
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "multiplicative factor {factor} at y = {y} must be positive and finite"
        )));
    }
    x_tilde.scaled(factor)
}

/// Price at depth 0 approached from the side of `direction`; differs from
/// `X̃` only for models with a jump at the origin.
fn price_limit_at_zero(
    model: &ImpactModel,
    x_tilde: &ScenarioVector,
    direction: f64,
) -> Result<ScenarioVector> {
    match *model {
        ImpactModel::SignLinear { theta, .. } => x_tilde.shifted(theta * sign(direction)),
        _ => Ok(x_tilde.clone()),
    }
}

/// A single child order: `size` shares sold at a depth where at most `cap` are available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tranche {
    pub size: f64,
    pub cap: f64,
}

impl Tranche {
    pub fn uncapped(size: f64) -> Self {
        Self {
            size,
            cap: f64::INFINITY,
        }
    }
}

/// How a position is unwound at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum ExposurePolicy {
    Block,
    SplitContinuous,
    SplitDiscrete(Vec<Tranche>),
}

/// The horizon value `Z_y` of unwinding position `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposure {
    pub z: ScenarioVector,
    pub y: f64,
    pub policy: ExposurePolicy,
}

/// Quadrature choice for split exposures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quadrature {
    /// Closed form where the model has one, adaptive trapezoid otherwise.
    #[default]
    ClosedForm,
    /// Adaptive trapezoid starting from `n_steps` sub-intervals, always.
    Trapezoid { n_steps: usize },
}

/// Block exposure `Z_y = X(w, -y)`.
pub fn offsetting_exposure(
    model: &ImpactModel,
    x_tilde: &ScenarioVector,
    y: f64,
) -> Result<Exposure> {
    Ok(Exposure {
        z: price_at(model, x_tilde, -y)?,
        y,
        policy: ExposurePolicy::Block,
    })
}

/// Split exposure `Z_y = ∫_0^y X(w, -u) du` (signed for `y < 0`).
pub fn split_exposure(
    model: &ImpactModel,
    x_tilde: &ScenarioVector,
    y: f64,
    quadrature: Quadrature,
) -> Result<Exposure> {
    model.validate()?;
    model.check_slope_space(x_tilde)?;
    if !y.is_finite() {
        return Err(Error::NonFiniteInput(format!("order size {y}")));
    }
    if let Quadrature::Trapezoid { n_steps } = quadrature {
        if n_steps < 2 {
            return Err(Error::InvalidParams("trapezoid needs n_steps >= 2".into()));
        }
    }
    let z = if y == 0.0 {
        x_tilde.scaled(0.0)?
    } else {
        match quadrature {
            Quadrature::ClosedForm => split_closed_form(model, x_tilde, y)?,
            Quadrature::Trapezoid { n_steps } => split_trapezoid(model, x_tilde, y, n_steps)?,
        }
    };
    Ok(Exposure {
        z,
        y,
        policy: ExposurePolicy::SplitContinuous,
    })
}

fn split_closed_form(model: &ImpactModel, x: &ScenarioVector, y: f64) -> Result<ScenarioVector> {
    match *model {
        ImpactModel::LinearAdditive { a } => x.map(|v| y * v - 0.5 * a * y * y),
        ImpactModel::StochasticSlope { ref slope } => {
            x.zip_map(slope, |v, m| y * v - 0.5 * m * y * y)
        }
        ImpactModel::SignLinear { theta, eta } => {
            x.map(|v| y * v - theta * y.abs() - 0.5 * eta * y * y)
        }
        ImpactModel::PowerLaw { gamma, alpha } => {
            let drag = gamma * y.abs().powf(alpha + 1.0) / (alpha + 1.0);
            x.map(|v| y * v - drag)
        }
        ImpactModel::ExponentialMultiplicative { a, horizon } => {
            let k = a * horizon;
            let weight = if k == 0.0 { y } else { -(-k * y).exp_m1() / k };
            x.map(|v| weight * v)
        }
        ImpactModel::SeparableAdditive { h } => {
            let drift = integrate_scalar(|u| h.eval(-u), y)?;
            x.map(|v| y * v + drift)
        }
        ImpactModel::SeparableMultiplicative { h } => {
            let lo = -y.abs();
            if 1.0 + h.eval(lo.min(-lo)) <= 0.0 || 1.0 + h.eval(lo) <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "multiplicative factor is not positive on [0, {y}]"
                )));
            }
            let weight = integrate_scalar(|u| 1.0 + h.eval(-u), y)?;
            x.map(|v| weight * v)
        }
    }
}

fn integrate_scalar(f: impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    let r = adaptive_trapezoid(
        |u, out| out[0] = f(u),
        1,
        0.0,
        y,
        2,
        DEFAULT_REL_TOL,
        MAX_STEPS,
    )?;
    Ok(r.values[0])
}

fn split_trapezoid(
    model: &ImpactModel,
    x: &ScenarioVector,
    y: f64,
    n_steps: usize,
) -> Result<ScenarioVector> {
    let origin = price_limit_at_zero(model, x, -y)?;
    // Surface model errors (e.g. a non-positive factor) before integrating.
    evaluate(model, x, -y)?;
    let r = adaptive_trapezoid(
        |u, out| {
            let p = if u == 0.0 {
                origin.clone()
            } else {
                evaluate(model, x, -u).expect("integrand checked at the far endpoint")
            };
            out.copy_from_slice(p.values());
        },
        x.len(),
        0.0,
        y,
        n_steps,
        DEFAULT_REL_TOL,
        MAX_STEPS,
    )?;
    ScenarioVector::from_raw(x.space(), r.values)
}

/// Discrete split `Σ_j X(w, -y_j) Δy_j` with cumulative depths `y_j`.
pub fn split_exposure_discrete(
    model: &ImpactModel,
    x_tilde: &ScenarioVector,
    tranches: &[Tranche],
) -> Result<Exposure> {
    if tranches.is_empty() {
        return Err(Error::InvalidParams(
            "at least one tranche is required".into(),
        ));
    }
    let mut depth = 0.0;
    let mut acc = vec![0.0; x_tilde.len()];
    for (index, t) in tranches.iter().enumerate() {
        if !(t.size > 0.0 && t.size.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "tranche {index} size {} must be positive",
                t.size
            )));
        }
        if t.size > t.cap {
            return Err(Error::TrancheCapViolation {
                index,
                size: t.size,
                cap: t.cap,
            });
        }
        depth += t.size;
        let p = price_at(model, x_tilde, -depth)?;
        for (a, v) in acc.iter_mut().zip(p.values()) {
            *a += v * t.size;
        }
    }
    Ok(Exposure {
        z: ScenarioVector::from_raw(x_tilde.space(), acc)?,
        y: depth,
        policy: ExposurePolicy::SplitDiscrete(tranches.to_vec()),
    })
}

/// Initial purchase price as a function of size.
#[derive(Clone)]
pub enum SupplyCurve {
    /// `base + slope * y`.
    Affine { base: f64, slope: f64 },
    /// Any increasing function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SupplyCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupplyCurve::Affine { base, slope } => f
                .debug_struct("Affine")
                .field("base", base)
                .field("slope", slope)
                .finish(),
            SupplyCurve::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Serializable supply curve, e.g. `{"base":70,"slope":0.2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplySpec {
    pub base: f64,
    #[serde(default)]
    pub slope: f64,
}

impl SupplySpec {
    pub fn build(&self) -> Result<SupplyCurve> {
        SupplyCurve::affine(self.base, self.slope)
    }
}

impl SupplyCurve {
    pub fn affine(base: f64, slope: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "supply base {base} must be > 0"
            )));
        }
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "supply slope {slope} must be >= 0"
            )));
        }
        Ok(SupplyCurve::Affine { base, slope })
    }

    /// `X_0(y)`.
    pub fn price(&self, y: f64) -> f64 {
        match self {
            SupplyCurve::Affine { base, slope } => base + slope * y,
            SupplyCurve::Custom(f) => f(y),
        }
    }
}

/// How the initial position is bought.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryPolicy {
    /// All `y` shares at `X_0(y)`.
    Block,
    /// Cheapest first: `∫_0^y X_0(u) du`.
    Split,
}

/// Cost of acquiring `y` shares.
pub fn initial_cost(curve: &SupplyCurve, y: f64, policy: EntryPolicy) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    match (policy, curve) {
        (EntryPolicy::Block, _) => Ok(y * curve.price(y)),
        (EntryPolicy::Split, SupplyCurve::Affine { base, slope }) => {
            Ok(y * base + 0.5 * slope * y * y)
        }
        (EntryPolicy::Split, SupplyCurve::Custom(f)) => integrate_scalar(|u| f(u), y),
    }
}

/// Where a grid check first failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridViolation {
    pub scenario: usize,
    pub y: f64,
    pub v: f64,
    /// Amount by which the inequality is violated.
    pub excess: f64,
    pub kind: &'static str,
}

/// Outcome of [`check_assumption1`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumption1Report {
    pub passed: bool,
    pub points_tested: usize,
    pub violations: usize,
    pub first_violation: Option<GridViolation>,
    /// Number of grid prices that came out negative (reported, not an error).
    pub negative_prices: usize,
}

/// Checks weak monotonicity of `y ↦ X(w, y)` over `y_grid` and the sandwich
/// `X(w, -y) <= X̃(w) <= X(w, y)` for the non-negative grid points.
pub fn check_assumption1(
    model: &ImpactModel,
    x_tilde: &ScenarioVector,
    y_grid: &[f64],
) -> Result<Assumption1Report> {
    let prices = y_grid
        .iter()
        .map(|&y| price_at(model, x_tilde, y))
        .collect::<Result<Vec<_>>>()?;
    let slack = |a: f64, b: f64| 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mut violations = 0;
    let mut first = None;
    let mut record = |v: GridViolation, first: &mut Option<GridViolation>| {
        violations += 1;
        if first.is_none() {
            *first = Some(v);
        }
    };
    for k in 1..y_grid.len() {
        for (w, (lo, hi)) in prices[k - 1]
            .values()
            .iter()
            .zip(prices[k].values())
            .enumerate()
        {
            if lo - hi > slack(*lo, *hi) {
                record(
                    GridViolation {
                        scenario: w,
                        y: y_grid[k - 1],
                        v: y_grid[k],
                        excess: lo - hi,
                        kind: "monotonicity",
                    },
                    &mut first,
                );
            }
        }
    }
    for &y in y_grid.iter().filter(|y| **y >= 0.0) {
        let up = price_at(model, x_tilde, y)?;
        let down = price_at(model, x_tilde, -y)?;
        for (w, ((d, x), u)) in down
            .values()
            .iter()
            .zip(x_tilde.values())
            .zip(up.values())
            .enumerate()
        {
            let excess = (d - x).max(x - u);
            if excess > slack(*d, *u) {
                record(
                    GridViolation {
                        scenario: w,
                        y: -y,
                        v: y,
                        excess,
                        kind: "sandwich",
                    },
                    &mut first,
                );
            }
        }
    }
    let negative_prices = prices
        .iter()
        .map(|p| p.values().iter().filter(|v| **v < 0.0).count())
        .sum();
    Ok(Assumption1Report {
        passed: violations == 0,
        points_tested: y_grid.len() * x_tilde.len(),
        violations,
        first_violation: first,
        negative_prices,
    })
}

/// Outcome of [`check_concavity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub passed: bool,
    pub pairs_tested: usize,
    pub violations: usize,
    pub worst: Option<GridViolation>,
}

/// Midpoint test `Z_{(y+v)/2} >= (Z_y + Z_v)/2 - tol` in every scenario for
/// every pair of grid points.
pub fn check_concavity<F>(family: F, y_grid: &[f64], tol: f64) -> Result<ConcavityReport>
where
    F: Fn(f64) -> Result<ScenarioVector>,
{
    if y_grid.len() < 3 {
        return Err(Error::InvalidParams(
            "concavity check needs at least 3 grid points".into(),
        ));
    }
    let at_grid = y_grid
        .iter()
        .map(|&y| family(y))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = 0;
    let mut violations = 0;
    let mut worst: Option<GridViolation> = None;
    for i in 0..y_grid.len() {
        for j in i + 1..y_grid.len() {
            let mid = family(0.5 * (y_grid[i] + y_grid[j]))?;
            pairs += 1;
            for (w, ((m, a), b)) in mid
                .values()
                .iter()
                .zip(at_grid[i].values())
                .zip(at_grid[j].values())
                .enumerate()
            {
                let excess = 0.5 * (a + b) - m;
                if excess > tol {
                    violations += 1;
                    if worst.as_ref().is_none_or(|v| excess > v.excess) {
                        worst = Some(GridViolation {
                            scenario: w,
                            y: y_grid[i],
                            v: y_grid[j],
                            excess,
                            kind: "concavity",
                        });
                    }
                }
            }
        }
    }
    Ok(ConcavityReport {
        passed: violations == 0,
        pairs_tested: pairs,
        violations,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> (ScenarioSpace, ScenarioVector) {
        let s = ScenarioSpace::uniform(3).unwrap();
        let x = s.vector(vec![80.0, 90.0, 100.0]).unwrap();
        (s, x)
    }

    fn single(v: f64) -> ScenarioVector {
        ScenarioSpace::uniform(1).unwrap().vector(vec![v]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn price_at_examples() {
        let (_, x) = demo();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        assert_eq!(
            price_at(&lin, &x, 10.0).unwrap().values(),
            &[85.0, 95.0, 105.0]
        );
        let pow = ImpactModel::PowerLaw {
            gamma: 2.0,
            alpha: 0.5,
        };
        assert_eq!(
            price_at(&pow, &single(100.0), -4.0).unwrap().values(),
            &[96.0]
        );
    }

    #[test]
    fn zero_order_returns_unaffected_price() {
        let (s, x) = demo();
        let models = [
            ImpactModel::LinearAdditive { a: 0.5 },
            ImpactModel::StochasticSlope {
                slope: s.vector(vec![0.1, 0.2, 0.3]).unwrap(),
            },
            ImpactModel::SignLinear {
                theta: 1.0,
                eta: 2.0,
            },
            ImpactModel::PowerLaw {
                gamma: 2.0,
                alpha: 0.5,
            },
            ImpactModel::ExponentialMultiplicative {
                a: 0.01,
                horizon: 1.0,
            },
            ImpactModel::SeparableAdditive {
                h: ImpactShape::Sqrt { scale: 1.0 },
            },
            ImpactModel::SeparableMultiplicative {
                h: ImpactShape::Log { scale: 0.001 },
            },
        ];
        for m in &models {
            assert_eq!(&price_at(m, &x, 0.0).unwrap(), &x, "{}", m.name());
        }
    }

    #[test]
    fn block_exposure_examples() {
        let (_, x) = demo();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        let e = offsetting_exposure(&lin, &x, 10.0).unwrap();
        assert_eq!(e.z.values(), &[75.0, 85.0, 95.0]);
        assert_eq!(e.policy, ExposurePolicy::Block);
        assert_eq!(offsetting_exposure(&lin, &x, 0.0).unwrap().z, x);

        let exp = ImpactModel::ExponentialMultiplicative {
            a: 0.01,
            horizon: 1.0,
        };
        let z = offsetting_exposure(&exp, &single(100.0), 10.0).unwrap().z;
        assert!((z.values()[0] - 90.48374180359595).abs() < 1e-10);
    }

    #[test]
    fn split_closed_forms() {
        let (_, x) = demo();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        let z = split_exposure(&lin, &x, 10.0, Quadrature::ClosedForm)
            .unwrap()
            .z;
        assert_eq!(z.values(), &[775.0, 875.0, 975.0]);

        let pow = ImpactModel::PowerLaw {
            gamma: 2.0,
            alpha: 0.5,
        };
        let z = split_exposure(&pow, &single(100.0), 4.0, Quadrature::ClosedForm)
            .unwrap()
            .z;
        assert!((z.values()[0] - (400.0 - 32.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn split_of_nothing_is_zero() {
        let (_, x) = demo();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        for q in [Quadrature::ClosedForm, Quadrature::Trapezoid { n_steps: 4 }] {
            let z = split_exposure(&lin, &x, 0.0, q).unwrap().z;
            assert_eq!(z.values(), &[0.0, 0.0, 0.0]);
            let tiny = split_exposure(&lin, &x, 1e-12, q).unwrap().z;
            assert!(tiny.values().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn sign_linear_split_quadrature_handles_jump() {
        let (_, x) = demo();
        let m = ImpactModel::SignLinear {
            theta: 1.0,
            eta: 2.0,
        };
        for y in [3.0, -3.0] {
            let closed = split_exposure(&m, &x, y, Quadrature::ClosedForm).unwrap().z;
            let quad = split_exposure(&m, &x, y, Quadrature::Trapezoid { n_steps: 2 })
                .unwrap()
                .z;
            assert!(close(closed.values(), quad.values(), 1e-9));
        }
    }

    #[test]
    fn trapezoid_requires_two_steps() {
        let (_, x) = demo();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        assert!(split_exposure(&lin, &x, 1.0, Quadrature::Trapezoid { n_steps: 1 }).is_err());
    }

    #[test]
    fn discrete_split_examples() {
        let x = single(100.0);
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        let ten: Vec<_> = (0..10).map(|_| Tranche::uncapped(1.0)).collect();
        let e = split_exposure_discrete(&lin, &x, &ten).unwrap();
        assert!((e.z.values()[0] - 972.5).abs() < 1e-12);
        assert_eq!(e.y, 10.0);

        let (_, x3) = demo();
        let one = split_exposure_discrete(&lin, &x3, &[Tranche::uncapped(10.0)]).unwrap();
        let block = offsetting_exposure(&lin, &x3, 10.0).unwrap();
        assert_eq!(one.z.values(), block.z.scaled(10.0).unwrap().values());

        let err = split_exposure_discrete(
            &lin,
            &x,
            &[Tranche {
                size: 2.0,
                cap: 1.0,
            }],
        );
        assert!(matches!(
            err,
            Err(Error::TrancheCapViolation { index: 0, .. })
        ));
    }

    #[test]
    fn initial_cost_examples() {
        let c = SupplyCurve::affine(70.0, 0.2).unwrap();
        assert!((initial_cost(&c, 10.0, EntryPolicy::Block).unwrap() - 720.0).abs() < 1e-12);
        assert!((initial_cost(&c, 10.0, EntryPolicy::Split).unwrap() - 710.0).abs() < 1e-12);
        assert_eq!(initial_cost(&c, 0.0, EntryPolicy::Block).unwrap(), 0.0);
        assert_eq!(initial_cost(&c, 0.0, EntryPolicy::Split).unwrap(), 0.0);
        let custom = SupplyCurve::Custom(Arc::new(|y| 70.0 + 0.2 * y));
        assert!((initial_cost(&custom, 10.0, EntryPolicy::Split).unwrap() - 710.0).abs() < 1e-9);
    }

    #[test]
    fn assumption1_examples() {
        let (_, x) = demo();
        let grid: Vec<f64> = (-10..=10).map(f64::from).collect();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        assert!(check_assumption1(&lin, &x, &grid).unwrap().passed);

        let bad = ImpactModel::LinearAdditive { a: -0.5 };
        let r = check_assumption1(&bad, &x, &grid).unwrap();
        assert!(!r.passed);
        let first = r.first_violation.unwrap();
        assert_eq!(
            (first.y, first.v, first.kind),
            (-10.0, -9.0, "monotonicity")
        );

        let sl = ImpactModel::SignLinear {
            theta: 1.0,
            eta: 2.0,
        };
        assert!(check_assumption1(&sl, &x, &grid).unwrap().passed);
    }

    #[test]
    fn negative_prices_are_reported_not_rejected() {
        let x = single(1.0);
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        let r = check_assumption1(&lin, &x, &[-10.0, 0.0, 10.0]).unwrap();
        assert!(r.passed);
        assert_eq!(r.negative_prices, 1);
    }

    #[test]
    fn concavity_examples() {
        let (_, x) = demo();
        let grid: Vec<f64> = (1..=9).map(f64::from).collect();
        let lin = ImpactModel::LinearAdditive { a: 0.5 };
        let block = |y| offsetting_exposure(&lin, &x, y).map(|e| e.z);
        assert!(
            check_concavity(block, &grid, CONCAVITY_TOLERANCE)
                .unwrap()
                .passed
        );

        let pow = ImpactModel::PowerLaw {
            gamma: 2.0,
            alpha: 0.5,
        };
        let block = |y| offsetting_exposure(&pow, &x, y).map(|e| e.z);
        let r = check_concavity(block, &grid, CONCAVITY_TOLERANCE).unwrap();
        assert!(!r.passed);
        assert!(r.violations > 0);

        let split = |y| split_exposure(&pow, &x, y, Quadrature::ClosedForm).map(|e| e.z);
        assert!(
            check_concavity(split, &grid, CONCAVITY_TOLERANCE)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn multiplicative_factor_must_stay_positive() {
        let x = single(100.0);
        let m = ImpactModel::SeparableMultiplicative {
            h: ImpactShape::Linear { slope: 0.5 },
        };
        assert!(matches!(
            price_at(&m, &x, -3.0),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn spec_round_trip_from_json() {
        let s = ScenarioSpace::uniform(3).unwrap();
        let spec: ImpactSpec = serde_json::from_str(r#"{"kind":"linear","a":0.5}"#).unwrap();
        assert_eq!(
            spec.build(&s).unwrap(),
            ImpactModel::LinearAdditive { a: 0.5 }
        );
        let spec: ImpactSpec =
            serde_json::from_str(r#"{"kind":"separable_additive","h":{"shape":"sqrt","scale":2}}"#)
                .unwrap();
        assert!(matches!(
            spec.build(&s).unwrap(),
            ImpactModel::SeparableAdditive { .. }
        ));
        let bad: ImpactSpec =
            serde_json::from_str(r#"{"kind":"power_law","gamma":2,"alpha":1.5}"#).unwrap();
        assert!(bad.build(&s).is_err());
        let slope: ImpactSpec =
            serde_json::from_str(r#"{"kind":"stochastic_slope","slope":[1,2]}"#).unwrap();
        assert!(slope.build(&s).is_err());
    }
}
