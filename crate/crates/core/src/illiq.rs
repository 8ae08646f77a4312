//! Illiquidity risk measures and capital requirements.
//!
//! For an asset with impact model `X(w, y)` and a risk functional `ρ`:
//!
//! * `β(y) = ρ(X(·, -y))` for a long position unwound as one block,
//! * `β_split(y) = ρ(∫_0^y X(·, -u) du)` when it is sold in infinitesimal pieces,
//! * `δ(y) = ρ(-X(·, -y))` for a short position `y < 0`,
//! * `β(y⃗) = ρ(Σ_i X_i(·, -y_i))` for a portfolio.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{
    check_concavity, initial_cost, offsetting_exposure, split_exposure, EntryPolicy, ImpactModel,
    Quadrature, SupplyCurve, CONCAVITY_TOLERANCE,
};
use crate::riskmeasure::{
    avar_gbm, check_le, rho, run_trials, var_gbm_closed_form, AxiomReport, RiskFunctional,
    Violation, AXIOM_TOLERANCE,
};
use crate::rng::std_normal_quantile;
use crate::scenario::{
    standard_normals, GbmParams, ProbabilityVector, ScenarioSpace, ScenarioVector,
};

/// Axiom tolerance when the measure goes through numerical quadrature.
pub const QUADRATURE_AXIOM_TOLERANCE: f64 = 1e-6;

/// Number of VaR levels used for the GBM AVaR integral.
pub const GBM_AVAR_LEVELS: usize = 1 << 12;

/// One traded security.
#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub name: String,
    pub model: ImpactModel,
    pub x_tilde: ScenarioVector,
}

impl Asset {
    pub fn new(
        name: impl Into<String>,
        model: ImpactModel,
        x_tilde: ScenarioVector,
    ) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            name: name.into(),
            model,
            x_tilde,
        })
    }
}

/// A risk functional together with the probability it is evaluated under.
#[derive(Debug, Clone, PartialEq)]
pub struct Risk {
    pub functional: RiskFunctional,
    pub probability: Option<ProbabilityVector>,
}

impl Risk {
    pub fn new(functional: RiskFunctional, probability: Option<ProbabilityVector>) -> Result<Self> {
        functional.validate()?;
        if functional.requires_probability() && probability.is_none() {
            return Err(Error::MissingProbability(functional.name()));
        }
        Ok(Self {
            functional,
            probability,
        })
    }

    /// Uses the probability attached to `space`, if any.
    pub fn on(functional: RiskFunctional, space: &ScenarioSpace) -> Result<Self> {
        Self::new(functional, space.probability().cloned())
    }

    pub fn eval(&self, z: &ScenarioVector) -> Result<f64> {
        rho(&self.functional, z, self.probability.as_ref())
    }
}

/// `ρ(Z_y)` for any sign of `y`; `y = 0` gives `ρ(X̃)`.
pub fn block_risk(asset: &Asset, risk: &Risk, y: f64) -> Result<f64> {
    risk.eval(&offsetting_exposure(&asset.model, &asset.x_tilde, y)?.z)
}

/// `ρ(∫_0^y X(·, -u) du)` for any sign of `y` (signed integral).
pub fn split_risk(asset: &Asset, risk: &Risk, y: f64, quadrature: Quadrature) -> Result<f64> {
    risk.eval(&split_exposure(&asset.model, &asset.x_tilde, y, quadrature)?.z)
}

fn long_position(y: f64) -> Result<()> {
    if y >= 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPosition(format!(
            "long measure needs y >= 0, got {y}"
        )))
    }
}

/// Long-side measure `β(y) = ρ(Z_y)`, with `β(0) = ρ(X̃)`.
pub fn beta(asset: &Asset, risk: &Risk, y: f64) -> Result<f64> {
    long_position(y)?;
    block_risk(asset, risk, y)
}

/// Split-trade measure `ρ(∫_0^y X(·, -u) du)`. It is an aggregate over the
/// whole position and vanishes at `y = 0`.
pub fn beta_split(asset: &Asset, risk: &Risk, y: f64, quadrature: Quadrature) -> Result<f64> {
    long_position(y)?;
    split_risk(asset, risk, y, quadrature)
}

/// Whether the short-side measure has a known profile for this combination.
///
/// Additive impact works with any cash-additive `ρ`; multiplicative impact
/// needs a positively homogeneous one. A scenario-dependent slope is not
/// supported.
pub fn short_side_supported(model: &ImpactModel, functional: &RiskFunctional) -> bool {
    match model {
        ImpactModel::LinearAdditive { .. }
        | ImpactModel::SignLinear { .. }
        | ImpactModel::PowerLaw { .. }
        | ImpactModel::SeparableAdditive { .. } => true,
        ImpactModel::ExponentialMultiplicative { .. }
        | ImpactModel::SeparableMultiplicative { .. } => functional.is_positively_homogeneous(),
        ImpactModel::StochasticSlope { .. } => false,
    }
}

/// Short-side measure `δ(y) = ρ(-Z_y)` for `y <= 0`, with `δ(0) = ρ(-X̃)`.
pub fn delta_short(asset: &Asset, risk: &Risk, y: f64) -> Result<f64> {
    if !(y <= 0.0 && y.is_finite()) {
        return Err(Error::InvalidPosition(format!(
            "short measure needs y <= 0, got {y}"
        )));
    }
    if !short_side_supported(&asset.model, &risk.functional) {
        return Err(Error::UnsupportedModelForShortSide(format!(
            "{} with {}",
            asset.model.name(),
            risk.functional.name()
        )));
    }
    let z = offsetting_exposure(&asset.model, &asset.x_tilde, y)?.z;
    risk.eval(&z.negated())
}

/// How the capital requirement treats the exit and entry legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapitalPolicy {
    /// Block exit, block entry: `y β(y) + y X_0(y)`.
    Block,
    /// Split exit, block entry: `β_split(y) + y X_0(y)`.
    Split,
    /// Split exit and split entry: `β_split(y) + ∫_0^y X_0`.
    SplitEntry,
}

impl CapitalPolicy {
    fn entry(self) -> EntryPolicy {
        match self {
            CapitalPolicy::SplitEntry => EntryPolicy::Split,
            _ => EntryPolicy::Block,
        }
    }
}

/// Entry leg of one asset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetLeg {
    pub asset: String,
    pub y: f64,
    pub initial_cost: f64,
}

/// A capital requirement split into its legs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapitalReport {
    pub policy: CapitalPolicy,
    /// The measure the requirement is built from (per unit for block, aggregate for split).
    pub beta_value: f64,
    /// Capital attributed to the unwinding risk.
    pub risk_leg: f64,
    pub initial_cost: f64,
    pub capital_requirement: f64,
    pub per_asset: Vec<AssetLeg>,
}

/// Capital for a single position of `y > 0` shares given its measure value.
///
/// For [`CapitalPolicy::Block`] `beta_value` is `β(y)`; for the split
/// policies it is `β_split(y)`.
pub fn capital_requirement(
    y: f64,
    beta_value: f64,
    curve: &SupplyCurve,
    policy: CapitalPolicy,
) -> Result<CapitalReport> {
    long_position(y)?;
    let risk_leg = match policy {
        CapitalPolicy::Block => y * beta_value,
        CapitalPolicy::Split | CapitalPolicy::SplitEntry => beta_value,
    };
    let cost = initial_cost(curve, y, policy.entry())?;
    Ok(CapitalReport {
        policy,
        beta_value,
        risk_leg,
        initial_cost: cost,
        capital_requirement: risk_leg + cost,
        per_asset: vec![AssetLeg {
            asset: String::new(),
            y,
            initial_cost: cost,
        }],
    })
}

fn check_portfolio(assets: &[Asset], y: &[f64]) -> Result<()> {
    if assets.is_empty() {
        return Err(Error::InvalidPosition(
            "portfolio needs at least one asset".into(),
        ));
    }
    if assets.len() != y.len() {
        return Err(Error::InvalidPosition(format!(
            "{} positions for {} assets",
            y.len(),
            assets.len()
        )));
    }
    if let Some((i, v)) = y
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidPosition(format!(
            "component {i} ({}) is {v}; portfolio positions must be > 0",
            assets[i].name
        )));
    }
    Ok(())
}

fn sum_exposures<F>(assets: &[Asset], y: &[f64], exposure: F) -> Result<ScenarioVector>
where
    F: Fn(&Asset, f64) -> Result<ScenarioVector>,
{
    let mut total = exposure(&assets[0], y[0])?;
    for (asset, &yi) in assets.iter().zip(y).skip(1) {
        total = total.add(&exposure(asset, yi)?)?;
    }
    Ok(total)
}

fn block_sum(assets: &[Asset], y: &[f64]) -> Result<ScenarioVector> {
    sum_exposures(assets, y, |a, v| {
        Ok(offsetting_exposure(&a.model, &a.x_tilde, v)?.z)
    })
}

fn split_sum(assets: &[Asset], y: &[f64], quadrature: Quadrature) -> Result<ScenarioVector> {
    sum_exposures(assets, y, |a, v| {
        Ok(split_exposure(&a.model, &a.x_tilde, v, quadrature)?.z)
    })
}

/// `β(y⃗) = ρ(Σ_i Z^i_{y_i})`, every `y_i > 0`.
pub fn beta_portfolio(assets: &[Asset], risk: &Risk, y: &[f64]) -> Result<f64> {
    check_portfolio(assets, y)?;
    risk.eval(&block_sum(assets, y)?)
}

/// `ρ(Σ_i ∫_0^{y_i} X_i(·, -u) du)`, every `y_i > 0`.
pub fn beta_portfolio_split(
    assets: &[Asset],
    risk: &Risk,
    y: &[f64],
    quadrature: Quadrature,
) -> Result<f64> {
    check_portfolio(assets, y)?;
    risk.eval(&split_sum(assets, y, quadrature)?)
}

/// Capital for a portfolio, valued on liquidation revenue.
///
/// The risk leg is `ρ(Σ_i y_i Z^i_{y_i})` for block exits and
/// `ρ(Σ_i ∫_0^{y_i} X_i(·, -u) du)` for split exits; the entry legs are the
/// per-asset initial costs. `beta_value` holds the price-sum measure
/// [`beta_portfolio`] (block) or [`beta_portfolio_split`] (split).
pub fn portfolio_capital(
    assets: &[Asset],
    curves: &[SupplyCurve],
    risk: &Risk,
    y: &[f64],
    policy: CapitalPolicy,
    quadrature: Quadrature,
) -> Result<CapitalReport> {
    check_portfolio(assets, y)?;
    if curves.len() != assets.len() {
        return Err(Error::InvalidParams(format!(
            "{} supply curves for {} assets",
            curves.len(),
            assets.len()
        )));
    }
    let (beta_value, risk_leg) = match policy {
        CapitalPolicy::Block => {
            let revenue = sum_exposures(assets, y, |a, v| {
                offsetting_exposure(&a.model, &a.x_tilde, v)?.z.scaled(v)
            })?;
            (beta_portfolio(assets, risk, y)?, risk.eval(&revenue)?)
        }
        CapitalPolicy::Split | CapitalPolicy::SplitEntry => {
            let b = beta_portfolio_split(assets, risk, y, quadrature)?;
            (b, b)
        }
    };
    let per_asset = assets
        .iter()
        .zip(curves)
        .zip(y)
        .map(|((a, c), &v)| {
            Ok(AssetLeg {
                asset: a.name.clone(),
                y: v,
                initial_cost: initial_cost(c, v, policy.entry())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cost: f64 = per_asset.iter().map(|l| l.initial_cost).sum();
    Ok(CapitalReport {
        policy,
        beta_value,
        risk_leg,
        initial_cost: cost,
        capital_requirement: risk_leg + cost,
        per_asset,
    })
}

/// `β(y) = e^{-ayT} ρ(X̃)` for a GBM price under exponential impact, with
/// `ρ` a VaR (closed form) or AVaR (integral of the VaR curve).
pub fn beta_gbm_exponential(
    params: &GbmParams,
    a: f64,
    y: f64,
    functional: &RiskFunctional,
) -> Result<f64> {
    long_position(y)?;
    let base = match *functional {
        RiskFunctional::Var { delta } => var_gbm_closed_form(params, delta)?,
        RiskFunctional::Avar { delta } => avar_gbm(params, delta, GBM_AVAR_LEVELS)?,
        _ => {
            return Err(Error::InvalidParams(format!(
                "no GBM closed form for {}",
                functional.name()
            )))
        }
    };
    Ok((-a * y * params.horizon).exp() * base)
}

/// Covariance `Σ_ij = σ_i σ_j R_ij` of the Brownian log terms, checked to be
/// positive semidefinite.
fn covariance(params: &[GbmParams], correlation: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = params.len();
    if correlation.len() != n || correlation.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParams(format!("correlation must be {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let r = correlation[i][j];
            if !r.is_finite() || r.abs() > 1.0 || (r - correlation[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "correlation entry ({i},{j}) = {r} is not a symmetric value in [-1, 1]"
                )));
            }
        }
        if (correlation[i][i] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "correlation diagonal ({i},{i}) must be 1"
            )));
        }
    }
    let cov = DMatrix::from_fn(n, n, |i, j| {
        params[i].sigma * params[j].sigma * correlation[i][j]
    });
    let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
    let scale = cov.diagonal().max().max(1.0);
    if min_eig < -1e-12 * scale {
        return Err(Error::NonPsdCovariance(min_eig));
    }
    Ok(cov)
}

fn check_gbm_portfolio(params: &[GbmParams], a: &[f64], y: &[f64], delta: f64) -> Result<f64> {
    if params.is_empty() || a.len() != params.len() || y.len() != params.len() {
        return Err(Error::InvalidParams(
            "params, impact slopes and positions must have equal, non-zero length".into(),
        ));
    }
    for p in params {
        p.validate()?;
    }
    let horizon = params[0].horizon;
    if params.iter().any(|p| p.horizon != horizon) {
        return Err(Error::InvalidParams(
            "all assets must share one horizon".into(),
        ));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidPosition(format!(
            "positions must be > 0, got {v}"
        )));
    }
    RiskFunctional::Var { delta }.validate()?;
    Ok(horizon)
}

/// `VaR_δ(Σ_i ln X̃_i) + Σ_i a_i y_i T` for correlated GBMs under exponential
/// impact. This measures the sum of LOG prices, not of prices.
pub fn var_gbm_portfolio(
    params: &[GbmParams],
    a: &[f64],
    correlation: &[Vec<f64>],
    y: &[f64],
    delta: f64,
) -> Result<f64> {
    let horizon = check_gbm_portfolio(params, a, y, delta)?;
    let cov = covariance(params, correlation)?;
    let spread = cov.sum().max(0.0).sqrt();
    let drift: f64 = params.iter().map(|p| p.log_mean()).sum();
    let impact: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi * horizon).sum();
    Ok(-std_normal_quantile(delta) * horizon.sqrt() * spread - drift + impact)
}

/// Monte Carlo counterpart of [`var_gbm_portfolio`] on `n` seeded correlated paths.
pub fn var_gbm_portfolio_mc(
    params: &[GbmParams],
    a: &[f64],
    correlation: &[Vec<f64>],
    y: &[f64],
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let horizon = check_gbm_portfolio(params, a, y, delta)?;
    covariance(params, correlation)?;
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let k = params.len();
    let corr = DMatrix::from_fn(k, k, |i, j| correlation[i][j]);
    // Jitter keeps Cholesky usable on singular but valid correlations.
    let chol = corr
        .clone()
        .cholesky()
        .or_else(|| (corr + DMatrix::identity(k, k) * 1e-12).cholesky())
        .ok_or(Error::NonPsdCovariance(0.0))?
        .l();
    let shocks: Vec<Vec<f64>> = (0..k)
        .map(|i| standard_normals(seed, i as u64, n))
        .collect();
    let mut sums = vec![0.0; n];
    for (path, s) in sums.iter_mut().enumerate() {
        for (i, p) in params.iter().enumerate() {
            let w: f64 = (0..=i).map(|j| chol[(i, j)] * shocks[j][path]).sum();
            *s += p.log_mean() + p.log_sd() * w;
        }
    }
    let space = ScenarioSpace::uniform(n)?;
    let base = rho(
        &RiskFunctional::Var { delta },
        &space.vector(sums)?,
        space.probability(),
    )?;
    let impact: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi * horizon).sum();
    Ok(base + impact)
}

/// Expected shape of a measure as a function of position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `β`: increasing, cash sub-additive, convex.
    LongBlock,
    /// `β_split`: decreasing, cash super-additive, convex.
    LongSplit,
    /// `δ`: decreasing, cash super-additive, concave.
    Short,
}

/// Sampling parameters for [`check_beta_axioms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomSweep {
    pub trials: usize,
    pub seed: u64,
    /// Positions are drawn from `(0, upper]` (or `[-upper, 0)` on the short side).
    pub upper: f64,
    pub tolerance: f64,
}

impl Default for AxiomSweep {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            upper: 100.0,
            tolerance: AXIOM_TOLERANCE,
        }
    }
}

/// Which axioms are expected to fail for the configuration at hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Expectations {
    pub shape_may_fail: bool,
}

/// Checks a measure `eval(y⃗)` against `profile` on `sweep.trials` seeded
/// `(y, v, m, λ)` draws. Positions have `dim` components; the cash axiom shifts
/// every component by `m`.
pub fn check_beta_axioms<F>(
    profile: Profile,
    dim: usize,
    eval: F,
    sweep: AxiomSweep,
    expect: Expectations,
) -> Result<Vec<AxiomReport>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if sweep.trials == 0 || dim == 0 {
        return Err(Error::InvalidParams("need trials >= 1 and dim >= 1".into()));
    }
    let tol = sweep.tolerance;
    let outcomes = run_trials(
        sweep.seed,
        sweep.trials,
        |i, c| -> Result<[Option<Violation>; 3]> {
            let mut draw = || -> Vec<f64> {
                (0..dim)
                    .map(|_| match profile {
                        Profile::Short => -sweep.upper * c.uniform(),
                        _ => sweep.upper * c.uniform(),
                    })
                    .collect()
            };
            let y = draw();
            let v = draw();
            let m = match profile {
                // keep y + m <= 0
                Profile::Short => {
                    -y.iter().copied().fold(f64::NEG_INFINITY, f64::max) * c.uniform()
                }
                _ => sweep.upper * c.uniform(),
            };
            let lambda = c.uniform();

            let hi: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a.max(*b)).collect();
            let lo: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a.min(*b)).collect();
            let (b_hi, b_lo) = (eval(&hi)?, eval(&lo)?);
            let mono = match profile {
                Profile::LongBlock => check_le(i, b_lo, b_hi, tol, || {
                    format!("beta({lo:?}) = {b_lo} > beta({hi:?}) = {b_hi}")
                }),
                _ => check_le(i, b_hi, b_lo, tol, || {
                    format!("measure({hi:?}) = {b_hi} > measure({lo:?}) = {b_lo}")
                }),
            };

            let by = eval(&y)?;
            let shifted: Vec<f64> = y.iter().map(|a| a + m).collect();
            let bs = eval(&shifted)?;
            let cash = match profile {
                Profile::LongBlock => check_le(i, by - m, bs, tol, || {
                    format!("beta(y + {m}) = {bs} < beta(y) - m = {}", by - m)
                }),
                _ => check_le(i, bs, by + m, tol, || {
                    format!("measure(y + {m}) = {bs} > measure(y) + m = {}", by + m)
                }),
            };

            let bv = eval(&v)?;
            let mix: Vec<f64> = y
                .iter()
                .zip(&v)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let bm = eval(&mix)?;
            let chord = lambda * by + (1.0 - lambda) * bv;
            let shape = match profile {
                Profile::Short => check_le(i, chord, bm, tol, || {
                    format!("measure(mix, lambda = {lambda}) = {bm} < chord {chord}")
                }),
                _ => check_le(i, bm, chord, tol, || {
                    format!("measure(mix, lambda = {lambda}) = {bm} > chord {chord}")
                }),
            };
            Ok([mono, cash, shape])
        },
    );
    let mut cols: [Vec<Option<Violation>>; 3] = Default::default();
    for o in outcomes {
        for (col, v) in cols.iter_mut().zip(o?) {
            col.push(v);
        }
    }
    let [mono, cash, shape] = cols;
    let (mono_name, cash_name, shape_name) = match profile {
        Profile::LongBlock => ("increasing", "cash_sub_additivity", "convexity"),
        Profile::LongSplit => ("decreasing", "cash_super_additivity", "convexity"),
        Profile::Short => ("decreasing", "cash_super_additivity", "concavity"),
    };
    Ok(vec![
        AxiomReport::from_outcomes(mono_name, mono, false),
        AxiomReport::from_outcomes(cash_name, cash, false),
        AxiomReport::from_outcomes(shape_name, shape, expect.shape_may_fail),
    ])
}

/// Midpoint concavity of the block exposures on `(0, upper]`.
pub fn block_exposure_concave(asset: &Asset, upper: f64) -> Result<bool> {
    let grid: Vec<f64> = (1..=20).map(|k| upper * k as f64 / 20.0).collect();
    let report = check_concavity(
        |y| Ok(offsetting_exposure(&asset.model, &asset.x_tilde, y)?.z),
        &grid,
        CONCAVITY_TOLERANCE,
    )?;
    Ok(report.passed)
}

fn uses_quadrature(model: &ImpactModel, quadrature: Quadrature) -> bool {
    matches!(quadrature, Quadrature::Trapezoid { .. })
        || matches!(
            model,
            ImpactModel::SeparableAdditive { .. } | ImpactModel::SeparableMultiplicative { .. }
        )
}

/// Axiom suite for `β`. Convexity failures are expected when `ρ` is a VaR or
/// the block exposure is not concave.
pub fn beta_axioms(asset: &Asset, risk: &Risk, sweep: AxiomSweep) -> Result<Vec<AxiomReport>> {
    let expect = Expectations {
        shape_may_fail: !risk.functional.is_convex()
            || !block_exposure_concave(asset, sweep.upper)?,
    };
    check_beta_axioms(
        Profile::LongBlock,
        1,
        |y| beta(asset, risk, y[0]),
        sweep,
        expect,
    )
}

/// Axiom suite for `β_split`.
pub fn beta_split_axioms(
    asset: &Asset,
    risk: &Risk,
    quadrature: Quadrature,
    mut sweep: AxiomSweep,
) -> Result<Vec<AxiomReport>> {
    if uses_quadrature(&asset.model, quadrature) {
        sweep.tolerance = sweep.tolerance.max(QUADRATURE_AXIOM_TOLERANCE);
    }
    let expect = Expectations {
        shape_may_fail: !risk.functional.is_convex(),
    };
    check_beta_axioms(
        Profile::LongSplit,
        1,
        |y| beta_split(asset, risk, y[0], quadrature),
        sweep,
        expect,
    )
}

/// Axiom suite for `δ` on `[-upper, 0)`. Concavity rests on cash invariance
/// absorbing an additive impact, so it is expected to fail for multiplicative
/// models.
pub fn delta_axioms(asset: &Asset, risk: &Risk, sweep: AxiomSweep) -> Result<Vec<AxiomReport>> {
    let expect = Expectations {
        shape_may_fail: !risk.functional.is_convex() || asset.model.additive_shift(-1.0).is_none(),
    };
    check_beta_axioms(
        Profile::Short,
        1,
        |y| delta_short(asset, risk, y[0]),
        sweep,
        expect,
    )
}

/// Axiom suite for the portfolio measure with the shift `y⃗ + m e`.
pub fn portfolio_axioms(
    assets: &[Asset],
    risk: &Risk,
    sweep: AxiomSweep,
) -> Result<Vec<AxiomReport>> {
    let mut concave = true;
    for a in assets {
        concave &= block_exposure_concave(a, sweep.upper)?;
    }
    let expect = Expectations {
        shape_may_fail: !risk.functional.is_convex() || !concave,
    };
    check_beta_axioms(
        Profile::LongBlock,
        assets.len(),
        |y| beta_portfolio(assets, risk, y),
        sweep,
        expect,
    )
}

/// Axiom suite for the split portfolio measure.
pub fn portfolio_split_axioms(
    assets: &[Asset],
    risk: &Risk,
    quadrature: Quadrature,
    mut sweep: AxiomSweep,
) -> Result<Vec<AxiomReport>> {
    if assets.iter().any(|a| uses_quadrature(&a.model, quadrature)) {
        sweep.tolerance = sweep.tolerance.max(QUADRATURE_AXIOM_TOLERANCE);
    }
    let expect = Expectations {
        shape_may_fail: !risk.functional.is_convex(),
    };
    check_beta_axioms(
        Profile::LongSplit,
        assets.len(),
        |y| beta_portfolio_split(assets, risk, y, quadrature),
        sweep,
        expect,
    )
}
