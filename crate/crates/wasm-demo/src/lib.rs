//! Browser demo. The page in `www/` calls three operations: liquidity curves
//! for a single asset, the conjugate round trip of the same curve, and GBM VaR
//! in closed form against Monte Carlo.
//!
//! The plain functions do the work and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use illiq_core::duality::{biconjugate_check, build_f, linspace, ExitPolicy};
use illiq_core::illiq::{beta, beta_split, capital_requirement, Asset, CapitalPolicy, Risk};
use illiq_core::riskmeasure::var_gbm_closed_form;
use illiq_core::scenario::sample_gbm;
use illiq_core::{GbmParams, ImpactModel, Quadrature, RiskFunctional, ScenarioSpace, SupplyCurve};
use wasm_bindgen::prelude::*;

/// Scenario prices under uniform probability, one impact model and one `ρ`.
struct Setup {
    asset: Asset,
    risk: Risk,
}

fn parse_prices(text: &str) -> Result<Vec<f64>, String> {
    let prices: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<_, _>>()?;
    if prices.is_empty() {
        return Err("enter at least one scenario price".into());
    }
    Ok(prices)
}

fn functional(kind: &str, param: f64) -> Result<RiskFunctional, String> {
    match kind {
        "worst_case" => Ok(RiskFunctional::WorstCase),
        "var" => Ok(RiskFunctional::Var { delta: param }),
        "avar" => Ok(RiskFunctional::Avar { delta: param }),
        "entropic" => Ok(RiskFunctional::Entropic { lambda: param }),
        other => Err(format!("unknown risk measure {other:?}")),
    }
}

fn impact(kind: &str, a: f64) -> Result<ImpactModel, String> {
    match kind {
        "linear" => Ok(ImpactModel::LinearAdditive { a }),
        // square-root impact
        "power_law" => Ok(ImpactModel::PowerLaw {
            gamma: a,
            alpha: 0.5,
        }),
        "exponential" => Ok(ImpactModel::ExponentialMultiplicative { a, horizon: 1.0 }),
        other => Err(format!("unknown impact model {other:?}")),
    }
}

fn setup(prices: &str, model: &str, a: f64, rho: &str, param: f64) -> Result<Setup, String> {
    let prices = parse_prices(prices)?;
    let space = ScenarioSpace::uniform(prices.len()).map_err(|e| e.to_string())?;
    let x = space.vector(prices).map_err(|e| e.to_string())?;
    let asset = Asset::new("x", impact(model, a)?, x).map_err(|e| e.to_string())?;
    let risk = Risk::on(functional(rho, param)?, &space).map_err(|e| e.to_string())?;
    Ok(Setup { asset, risk })
}

/// Rows of `y, β(y), β_split(y), block capital, split capital` for `n` positions
/// in `(0, y_max]`, flattened row by row.
#[allow(clippy::too_many_arguments)]
pub fn curves(
    prices: &str,
    model: &str,
    a: f64,
    rho: &str,
    param: f64,
    supply: (f64, f64),
    y_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if !(y_max > 0.0) || n == 0 {
        return Err("need y_max > 0 and at least one point".into());
    }
    let s = setup(prices, model, a, rho, param)?;
    let curve = SupplyCurve::affine(supply.0, supply.1).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(5 * n);
    for k in 1..=n {
        let y = y_max * k as f64 / n as f64;
        let b = beta(&s.asset, &s.risk, y).map_err(|e| e.to_string())?;
        let bs =
            beta_split(&s.asset, &s.risk, y, Quadrature::ClosedForm).map_err(|e| e.to_string())?;
        let cap = |v, p| {
            capital_requirement(y, v, &curve, p)
                .map(|r| r.capital_requirement)
                .map_err(|e| e.to_string())
        };
        out.extend([
            y,
            b,
            bs,
            cap(b, CapitalPolicy::Block)?,
            cap(bs, CapitalPolicy::Split)?,
        ]);
    }
    Ok(out)
}

/// Block curve `f(y) = ρ(Z_y)` on `[-y_max, y_max]` with its biconjugate.
/// Returns `[convex, max error, bound]` followed by `y, f, f**` rows.
pub fn round_trip(
    prices: &str,
    model: &str,
    a: f64,
    rho: &str,
    param: f64,
    y_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if !(y_max > 0.0) || n < 3 || n.is_multiple_of(2) {
        return Err("need y_max > 0 and an odd number of points >= 3".into());
    }
    let s = setup(prices, model, a, rho, param)?;
    let grid = linspace(-y_max, y_max, n);
    let f = build_f(&s.asset, &s.risk, &grid, ExitPolicy::Block).map_err(|e| e.to_string())?;
    let pair = biconjugate_check(&f).map_err(|e| e.to_string())?;
    let mut out = vec![
        if pair.convex { 1.0 } else { 0.0 },
        pair.max_recovery_error,
        pair.error_bound,
    ];
    for ((y, v), w) in grid.iter().zip(f.values()).zip(pair.f_star_star.values()) {
        out.extend([*y, *v, *w]);
    }
    Ok(out)
}

/// `[closed form, Monte Carlo]` VaR of a GBM price.
pub fn gbm_var(
    x0: f64,
    mu: f64,
    sigma: f64,
    horizon: f64,
    delta: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let params = GbmParams {
        x0,
        mu,
        sigma,
        horizon,
    };
    let closed = var_gbm_closed_form(&params, delta).map_err(|e| e.to_string())?;
    let (space, x) = sample_gbm(&params, paths, seed).map_err(|e| e.to_string())?;
    let mc = Risk::on(RiskFunctional::Var { delta }, &space)
        .and_then(|r| r.eval(&x))
        .map_err(|e| e.to_string())?;
    Ok(vec![closed, mc])
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = curves)]
#[allow(clippy::too_many_arguments)]
pub fn curves_js(
    prices: &str,
    model: &str,
    a: f64,
    rho: &str,
    param: f64,
    supply_base: f64,
    supply_slope: f64,
    y_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    js(curves(
        prices,
        model,
        a,
        rho,
        param,
        (supply_base, supply_slope),
        y_max,
        n,
    ))
}

#[wasm_bindgen(js_name = roundTrip)]
pub fn round_trip_js(
    prices: &str,
    model: &str,
    a: f64,
    rho: &str,
    param: f64,
    y_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    js(round_trip(prices, model, a, rho, param, y_max, n))
}

#[wasm_bindgen(js_name = gbmVar)]
pub fn gbm_var_js(
    x0: f64,
    mu: f64,
    sigma: f64,
    horizon: f64,
    delta: f64,
    paths: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    js(gbm_var(
        x0,
        mu,
        sigma,
        horizon,
        delta,
        paths,
        u64::from(seed),
    ))
}
