use std::path::Path;

use illiq_core::duality::{
    biconjugate_check, build_f, dual_check, is_infinite, linspace, lipschitz_check, ExitPolicy,
};
use illiq_core::illiq::{
    beta, beta_axioms, beta_portfolio, beta_portfolio_split, beta_split, beta_split_axioms,
    capital_requirement, delta_axioms, delta_short, portfolio_capital, short_side_supported,
    var_gbm_portfolio, var_gbm_portfolio_mc, Asset, AxiomSweep, CapitalPolicy,
};
use illiq_core::impact::check_assumption1;
use illiq_core::riskmeasure::{check_rho_axioms, AxiomReport, AXIOM_TOLERANCE};
use illiq_core::{Classification, RiskFunctional};
use serde_json::{json, Value};

use crate::config::{Exit, RunConfig};
use crate::output::{Output, Table};
use crate::Failure;

fn runtime(e: illiq_core::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn table_json(t: &Table) -> Value {
    serde_json::to_value(t).expect("tables serialize")
}

pub fn beta_cmd(cfg: &RunConfig, base: &Path) -> Result<Output, Failure> {
    let s = cfg.setup(base)?;
    let curve = cfg.supply()?;
    let grid = cfg.grid()?;
    let mut table = Table::new(&["y", "beta", "capital_block", "capital_split", "flag"]);
    for &y in &grid {
        if y > 0.0 {
            let b = beta(&s.asset, &s.risk, y).map_err(runtime)?;
            let bs = beta_split(&s.asset, &s.risk, y, cfg.quadrature).map_err(runtime)?;
            let cb = capital_requirement(y, b, &curve, CapitalPolicy::Block).map_err(runtime)?;
            let cs = capital_requirement(y, bs, &curve, CapitalPolicy::Split).map_err(runtime)?;
            table.push(vec![
                y.into(),
                b.into(),
                cb.capital_requirement.into(),
                cs.capital_requirement.into(),
                "".into(),
            ]);
        } else if y == 0.0 {
            // β(0) is taken to be ρ(X̃); no position, no capital
            let b = s.risk.eval(&s.asset.x_tilde).map_err(runtime)?;
            table.push(vec![
                y.into(),
                b.into(),
                0.0.into(),
                0.0.into(),
                "zero_position".into(),
            ]);
        } else {
            let d = delta_short(&s.asset, &s.risk, y).map_err(runtime)?;
            table.push(vec![
                y.into(),
                d.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                "short".into(),
            ]);
        }
    }
    let document = json!({
        "command": "beta",
        "asset": s.asset.name,
        "model": s.asset.model.name(),
        "rho": s.risk.functional,
        "table": table_json(&table),
    });
    Ok(Output {
        table,
        document,
        passed: true,
    })
}

fn push_reports(table: &mut Table, suite: &str, reports: &[AxiomReport]) {
    for r in reports {
        let class = serde_json::to_value(r.classification).expect("serializes");
        table.push(vec![
            suite.into(),
            r.axiom.as_str().into(),
            (r.pairs_tested as f64).into(),
            (r.violation_count as f64).into(),
            class.as_str().unwrap_or_default().into(),
        ]);
    }
}

pub fn axioms_cmd(cfg: &RunConfig, base: &Path) -> Result<Output, Failure> {
    let seed = cfg.seed()?;
    let a = &cfg.axioms;
    if a.trials == 0 || !(a.upper > 0.0) {
        return Err(Failure::Config(
            "axioms.trials must be >= 1 and axioms.upper > 0".into(),
        ));
    }
    let sweep = AxiomSweep {
        trials: a.trials,
        seed,
        upper: a.upper,
        tolerance: a.tolerance.unwrap_or(AXIOM_TOLERANCE),
    };
    let mut table = Table::new(&[
        "suite",
        "axiom",
        "pairs_tested",
        "violations",
        "classification",
    ]);
    let mut doc = serde_json::Map::new();
    let mut passed = true;

    let data = cfg.scenarios(base)?;
    let risk = cfg.risk(&data)?;
    let rho_reports = check_rho_axioms(
        &risk.functional,
        &data.space,
        risk.probability.as_ref(),
        a.trials,
        seed,
    )
    .map_err(runtime)?;
    passed &= !rho_reports.iter().any(AxiomReport::failed);
    push_reports(&mut table, "rho", &rho_reports);
    doc.insert("rho".into(), json!(rho_reports));

    if cfg.impact.is_some() {
        let s = cfg.setup(base)?;
        let grid = linspace(-a.upper, a.upper, 201);
        let a1 = check_assumption1(&s.asset.model, &s.asset.x_tilde, &grid).map_err(runtime)?;
        passed &= a1.passed;
        table.push(vec![
            "assumption1".into(),
            "monotone_and_sandwich".into(),
            (a1.points_tested as f64).into(),
            (a1.violations as f64).into(),
            if a1.passed { "pass" } else { "fail" }.into(),
        ]);
        doc.insert("assumption1".into(), json!(a1));

        let suites = [
            ("beta", Some(beta_axioms(&s.asset, &s.risk, sweep))),
            (
                "beta_split",
                Some(beta_split_axioms(&s.asset, &s.risk, cfg.quadrature, sweep)),
            ),
            (
                "delta",
                short_side_supported(&s.asset.model, &s.risk.functional)
                    .then(|| delta_axioms(&s.asset, &s.risk, sweep)),
            ),
        ];
        for (name, reports) in suites {
            let Some(reports) = reports else {
                doc.insert(name.into(), json!("not applicable"));
                continue;
            };
            let reports = reports.map_err(runtime)?;
            passed &= !reports.iter().any(AxiomReport::failed);
            push_reports(&mut table, name, &reports);
            doc.insert(name.into(), json!(reports));
        }

        let f = build_f(
            &s.asset,
            &s.risk,
            &linspace(-a.upper, a.upper, 401),
            ExitPolicy::Block,
        )
        .map_err(runtime)?;
        let lip = lipschitz_check(&f, a.trials, seed).map_err(runtime)?;
        passed &= lip.passed;
        table.push(vec![
            "lipschitz".into(),
            format!("ratio<={}", lip.bound).into(),
            (lip.pairs as f64).into(),
            (if lip.passed { 0.0 } else { 1.0 }).into(),
            if lip.passed { "pass" } else { "fail" }.into(),
        ]);
        doc.insert("lipschitz".into(), json!(lip));
    }
    doc.insert("passed".into(), json!(passed));
    Ok(Output {
        table,
        document: Value::Object(doc),
        passed,
    })
}

pub fn dual_cmd(cfg: &RunConfig, base: &Path) -> Result<Output, Failure> {
    let s = cfg.setup(base)?;
    let d = cfg
        .dual
        .as_ref()
        .ok_or_else(|| Failure::Config("missing field `dual`".into()))?;
    let grid = d.grid.points();
    if !grid.contains(&0.0) {
        return Err(Failure::Config("dual.grid must contain 0".into()));
    }
    let policy = match d.exit {
        Exit::Block => ExitPolicy::Block,
        Exit::Split => ExitPolicy::Split(cfg.quadrature),
    };
    let f = build_f(&s.asset, &s.risk, &grid, policy).map_err(runtime)?;
    let pair = biconjugate_check(&f).map_err(runtime)?;
    let tolerance = d.tolerance.unwrap_or(pair.error_bound);

    let mut table = Table::new(&["y", "f", "f_star_star", "abs_error"]);
    for ((y, fv), fss) in grid.iter().zip(f.values()).zip(pair.f_star_star.values()) {
        table.push(vec![
            (*y).into(),
            (*fv).into(),
            (*fss).into(),
            (fss - fv).abs().into(),
        ]);
    }
    let mut conj = Table::new(&["u", "f_star"]);
    for (u, v) in pair.f_star.grid().iter().zip(pair.f_star.values()) {
        if !is_infinite(*v) {
            conj.push(vec![(*u).into(), (*v).into()]);
        }
    }

    let closed_form = !matches!(s.risk.functional, RiskFunctional::Var { .. });
    let mut checks = Vec::new();
    if closed_form && !d.check_y.is_empty() {
        let seed = if d.samples > 0 { cfg.seed()? } else { 0 };
        for &y in &d.check_y {
            checks.push(dual_check(&s.asset, &s.risk, y, d.samples, seed).map_err(runtime)?);
        }
    }
    let recovered = pair.max_recovery_error <= tolerance;
    let passed = pair.convex && recovered && checks.iter().all(|c| c.passed);
    let document = json!({
        "command": "dual",
        "asset": s.asset.name,
        "model": s.asset.model.name(),
        "rho": s.risk.functional,
        "convex": pair.convex,
        "non_convex": !pair.convex,
        "max_recovery_error": pair.max_recovery_error,
        "error_bound": pair.error_bound,
        "tolerance": tolerance,
        "dual_checks": checks,
        "dual_checks_skipped": !closed_form && !d.check_y.is_empty(),
        "passed": passed,
        "curve": table_json(&table),
        "conjugate": table_json(&conj),
    });
    if !pair.convex {
        eprintln!("f is not convex along its grid; f** is its convex envelope");
    }
    Ok(Output {
        table,
        document,
        passed,
    })
}

pub fn split_compare_cmd(cfg: &RunConfig, base: &Path) -> Result<Output, Failure> {
    let s = cfg.setup(base)?;
    let curve = cfg.supply()?;
    let grid = cfg.grid()?;
    if let Some(y) = grid.iter().find(|y| !(**y > 0.0)) {
        return Err(Failure::Config(format!(
            "split-compare needs y > 0, got {y}"
        )));
    }
    let mut table = Table::new(&[
        "y",
        "beta_block",
        "beta_split",
        "risk_block",
        "risk_split",
        "capital_block",
        "capital_split",
        "capital_split_entry",
        "split_dominates",
    ]);
    let mut dominated = 0usize;
    for &y in &grid {
        let b = beta(&s.asset, &s.risk, y).map_err(runtime)?;
        let bs = beta_split(&s.asset, &s.risk, y, cfg.quadrature).map_err(runtime)?;
        let cb = capital_requirement(y, b, &curve, CapitalPolicy::Block).map_err(runtime)?;
        let cs = capital_requirement(y, bs, &curve, CapitalPolicy::Split).map_err(runtime)?;
        let ce = capital_requirement(y, bs, &curve, CapitalPolicy::SplitEntry).map_err(runtime)?;
        let dominates = cs.capital_requirement <= cb.capital_requirement;
        dominated += usize::from(dominates);
        table.push(vec![
            y.into(),
            b.into(),
            bs.into(),
            cb.risk_leg.into(),
            cs.risk_leg.into(),
            cb.capital_requirement.into(),
            cs.capital_requirement.into(),
            ce.capital_requirement.into(),
            (if dominates { 1.0 } else { 0.0 }).into(),
        ]);
    }
    let document = json!({
        "command": "split-compare",
        "asset": s.asset.name,
        "model": s.asset.model.name(),
        "rho": s.risk.functional,
        "points": grid.len(),
        "split_dominates": dominated,
        "table": table_json(&table),
    });
    Ok(Output {
        table,
        document,
        passed: true,
    })
}

pub fn portfolio_cmd(cfg: &RunConfig, base: &Path) -> Result<Output, Failure> {
    let p = cfg
        .portfolio
        .as_ref()
        .ok_or_else(|| Failure::Config("missing field `portfolio`".into()))?;
    let data = cfg.scenarios(base)?;
    let risk = cfg.risk(&data)?;
    if p.assets.len() != p.y.len() || p.assets.is_empty() {
        return Err(Failure::Config(
            "portfolio.assets and portfolio.y must be non-empty and of equal length".into(),
        ));
    }
    let cfg_err = |e: illiq_core::Error| Failure::Config(e.to_string());
    let mut assets = Vec::new();
    let mut curves = Vec::new();
    for a in &p.assets {
        let x = data.asset(&a.name).map_err(cfg_err)?.clone();
        let model = a.impact.build(&data.space).map_err(cfg_err)?;
        assets.push(Asset::new(a.name.clone(), model, x).map_err(cfg_err)?);
        curves.push(a.x0.build().map_err(cfg_err)?);
    }
    let y = &p.y;
    let block = beta_portfolio(&assets, &risk, y).map_err(runtime)?;
    let singles = assets
        .iter()
        .zip(y)
        .map(|(a, &v)| beta(a, &risk, v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let sum: f64 = singles.iter().sum();
    let split = beta_portfolio_split(&assets, &risk, y, cfg.quadrature).map_err(runtime)?;
    let mut capital = Vec::new();
    for policy in [
        CapitalPolicy::Block,
        CapitalPolicy::Split,
        CapitalPolicy::SplitEntry,
    ] {
        capital.push(
            portfolio_capital(&assets, &curves, &risk, y, policy, cfg.quadrature)
                .map_err(runtime)?,
        );
    }

    let mut table = Table::new(&["metric", "value"]);
    table.push(vec!["beta_block".into(), block.into()]);
    for (a, b) in assets.iter().zip(&singles) {
        table.push(vec![format!("beta[{}]", a.name).into(), (*b).into()]);
    }
    table.push(vec!["sum_single_betas".into(), sum.into()]);
    table.push(vec!["subadditivity_gap".into(), (sum - block).into()]);
    table.push(vec!["beta_split".into(), split.into()]);
    for c in &capital {
        let name = serde_json::to_value(c.policy).expect("serializes");
        table.push(vec![
            format!("capital_{}", name.as_str().unwrap_or_default()).into(),
            c.capital_requirement.into(),
        ]);
    }

    let mut gbm = Value::Null;
    if let Some(g) = &p.gbm {
        let exact =
            var_gbm_portfolio(&g.params, &g.a, &g.correlation, y, g.delta).map_err(runtime)?;
        table.push(vec!["gbm_log_var".into(), exact.into()]);
        let mut mc = Value::Null;
        if g.paths > 0 {
            let seed = cfg.seed()?;
            let v =
                var_gbm_portfolio_mc(&g.params, &g.a, &g.correlation, y, g.delta, g.paths, seed)
                    .map_err(runtime)?;
            table.push(vec!["gbm_log_var_mc".into(), v.into()]);
            mc = json!(v);
        }
        gbm = json!({"log_var": exact, "log_var_mc": mc, "paths": g.paths});
    }
    let classification = if sum >= block {
        Classification::Pass
    } else {
        Classification::Fail
    };
    let document = json!({
        "command": "portfolio",
        "y": y,
        "rho": risk.functional,
        "beta_block": block,
        "single_betas": singles,
        "sum_single_betas": sum,
        "subadditivity_gap": sum - block,
        "subadditivity": classification,
        "beta_split": split,
        "capital": capital,
        "gbm": gbm,
        "table": table_json(&table),
    });
    Ok(Output {
        table,
        document,
        passed: true,
    })
}
