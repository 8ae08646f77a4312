//! One test per acceptance criterion. Each prints a single PASS or FAIL line
//! on stderr (uncaptured, so it shows in the plain `cargo test` log) and then
//! asserts the same verdict.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use illiq_core::duality::{
    biconjugate_check, build_f, build_f_portfolio, dual_check, linspace, lipschitz_check,
    ExitPolicy, GridFunction,
};
use illiq_core::illiq::{
    beta, beta_axioms, beta_gbm_exponential, beta_portfolio, beta_split, beta_split_axioms,
    block_exposure_concave, capital_requirement, portfolio_capital, Asset, AxiomSweep,
    CapitalPolicy, Risk,
};
use illiq_core::rng::CounterStream;
use illiq_core::scenario::sample_gbm;
use illiq_core::{
    GbmParams, ImpactModel, ImpactShape, Quadrature, RiskFunctional, ScenarioSpace, SupplyCurve,
};
use verification::{avar, entropic, var, worst_case, GBM_VAR_DEMO};

fn report(n: u32, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    // bypasses the test harness capture
    let _ = writeln!(std::io::stderr(), "criterion {n} {verdict}: {detail}");
}

const X5: [f64; 5] = [80.0, 95.0, 100.0, 110.0, 120.0];
const P5: [f64; 5] = [0.1, 0.2, 0.3, 0.25, 0.15];

fn space5() -> ScenarioSpace {
    let labels = (1..=5).map(|i| format!("w{i}")).collect();
    ScenarioSpace::new(labels, Some(P5.to_vec())).unwrap()
}

fn asset(space: &ScenarioSpace, model: ImpactModel, x: &[f64]) -> Asset {
    Asset::new("x", model, space.vector(x.to_vec()).unwrap()).unwrap()
}

fn models(space: &ScenarioSpace) -> Vec<ImpactModel> {
    vec![
        ImpactModel::LinearAdditive { a: 0.5 },
        ImpactModel::StochasticSlope {
            slope: space.vector(vec![0.2, 0.4, 0.6, 0.3, 0.5]).unwrap(),
        },
        ImpactModel::SignLinear {
            theta: 1.0,
            eta: 0.3,
        },
        ImpactModel::SeparableAdditive {
            h: ImpactShape::Sqrt { scale: 1.0 },
        },
        ImpactModel::ExponentialMultiplicative {
            a: 0.002,
            horizon: 1.0,
        },
    ]
}

const CONVEX: [RiskFunctional; 3] = [
    RiskFunctional::WorstCase,
    RiskFunctional::Avar { delta: 0.3 },
    RiskFunctional::Entropic { lambda: 0.5 },
];

fn sweep(seed: u64) -> AxiomSweep {
    AxiomSweep {
        trials: 1000,
        seed,
        upper: 100.0,
        tolerance: 1e-9,
    }
}

fn sampled_y(seed: u64, n: usize) -> Vec<f64> {
    let mut c = CounterStream::new(seed).cursor(0);
    (0..n).map(|_| 100.0 * c.uniform()).collect()
}

#[test]
fn criterion_1_block_measure_axioms() {
    let start = Instant::now();
    let space = space5();
    let mut total = 0;
    let mut offenders = Vec::new();
    for f in CONVEX {
        let risk = Risk::on(f, &space).unwrap();
        for m in models(&space) {
            let a = asset(&space, m, &X5);
            for r in beta_axioms(&a, &risk, sweep(1)).unwrap() {
                total += r.violation_count;
                if r.violation_count > 0 {
                    offenders.push(format!(
                        "{}/{}/{}={}",
                        f.name(),
                        a.model.name(),
                        r.axiom,
                        r.violation_count
                    ));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = total == 0 && secs < 10.0;
    report(
        1,
        passed,
        &format!(
            "15 combinations x 1000 triples, {total} violations [{}], {secs:.2} s",
            offenders.join(", ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_2_split_measure_axioms() {
    let space = space5();
    let mut all = models(&space);
    let power = ImpactModel::PowerLaw {
        gamma: 2.0,
        alpha: 0.5,
    };
    all.push(power.clone());
    let power_concave = block_exposure_concave(&asset(&space, power, &X5), 100.0).unwrap();
    let mut unexpected = 0;
    let mut offenders = Vec::new();
    for f in CONVEX {
        let risk = Risk::on(f, &space).unwrap();
        for m in &all {
            let a = asset(&space, m.clone(), &X5);
            for r in beta_split_axioms(&a, &risk, Quadrature::ClosedForm, sweep(2)).unwrap() {
                if r.failed() {
                    unexpected += r.violation_count;
                    offenders.push(format!("{}/{}/{}", f.name(), a.model.name(), r.axiom));
                }
            }
        }
    }
    let passed = unexpected == 0 && !power_concave;
    report(
        2,
        passed,
        &format!(
            "18 combinations x 1000 triples, {unexpected} unexpected violations [{}], \
             power-law block exposure concave = {power_concave}",
            offenders.join(", ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_3_closed_forms() {
    let ys = sampled_y(3, 20);
    let uniform = ScenarioSpace::uniform(5).unwrap();
    let u5 = [0.2; 5];
    let weighted = space5();
    let a = 0.5;
    let linear = ImpactModel::LinearAdditive { a };
    let mut worst: f64 = 0.0;
    let mut check = |got: f64, want: f64| {
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    };

    let cases: [(RiskFunctional, &ScenarioSpace, f64); 3] = [
        (RiskFunctional::WorstCase, &weighted, worst_case(&X5)),
        (
            RiskFunctional::Entropic { lambda: 0.1 },
            &weighted,
            entropic(&X5, &P5, 0.1),
        ),
        (
            RiskFunctional::Avar { delta: 0.3 },
            &weighted,
            avar(&X5, &P5, 0.3),
        ),
    ];
    let var_rho = var(&X5, &u5, 0.3);
    let gbm = GbmParams {
        x0: 100.0,
        mu: 0.05,
        sigma: 0.2,
        horizon: 1.0,
    };
    let gamma = 2.0;
    let alpha = 0.5;
    for &y in &ys {
        for (f, space, rho) in &cases {
            let risk = Risk::on(*f, space).unwrap();
            let x = asset(space, linear.clone(), &X5);
            check(beta(&x, &risk, y).unwrap(), rho + a * y);
            let split = beta_split(&x, &risk, y, Quadrature::ClosedForm).unwrap();
            if let RiskFunctional::Entropic { lambda } = f {
                // not positively homogeneous: ρ(yX̃) is not yρ(X̃)
                let scaled: Vec<f64> = X5.iter().map(|v| y * v).collect();
                check(split, entropic(&scaled, &P5, *lambda) + a * y * y / 2.0);
            } else {
                check(split, y * rho + a * y * y / 2.0);
            }
            if f.is_positively_homogeneous() {
                let p = asset(space, ImpactModel::PowerLaw { gamma, alpha }, &X5);
                check(
                    beta_split(&p, &risk, y, Quadrature::ClosedForm).unwrap(),
                    y * rho + gamma * y.powf(alpha + 1.0) / (alpha + 1.0),
                );
            }
        }
        let var_risk = Risk::on(RiskFunctional::Var { delta: 0.3 }, &uniform).unwrap();
        check(
            beta(&asset(&uniform, linear.clone(), &X5), &var_risk, y).unwrap(),
            var_rho + a * y,
        );
        let expo = ImpactModel::ExponentialMultiplicative {
            a: 0.01,
            horizon: 1.0,
        };
        check(
            beta(&asset(&uniform, expo, &X5), &var_risk, y).unwrap(),
            (-0.01 * y).exp() * var_rho,
        );
        check(
            beta_gbm_exponential(&gbm, 0.01, y, &RiskFunctional::Var { delta: 0.05 }).unwrap(),
            (-0.01 * y).exp() * GBM_VAR_DEMO,
        );
    }
    let passed = worst <= 1e-9;
    report(
        3,
        passed,
        &format!("20 sampled y, largest relative deviation {worst:.3e} (tolerance 1e-9)"),
    );
    assert!(passed);
}

#[test]
fn criterion_4_gbm_monte_carlo() {
    let gbm = GbmParams {
        x0: 100.0,
        mu: 0.05,
        sigma: 0.2,
        horizon: 1.0,
    };
    let closed = illiq_core::riskmeasure::var_gbm_closed_form(&gbm, 0.05).unwrap();
    let start = Instant::now();
    let (space, x) = sample_gbm(&gbm, 1_000_000, 4).unwrap();
    let risk = Risk::on(RiskFunctional::Var { delta: 0.05 }, &space).unwrap();
    let mc = risk.eval(&x).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel = (mc - closed).abs() / closed.abs();
    let passed = (closed - GBM_VAR_DEMO).abs() <= 0.02 && rel <= 0.005 && secs < 5.0;
    report(
        4,
        passed,
        &format!(
            "closed form {closed:.6} (reference {GBM_VAR_DEMO}), MC {mc:.6} over 1e6 paths, \
             relative gap {:.3}%, {secs:.2} s",
            100.0 * rel
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_5_biconjugate_recovery() {
    let space = ScenarioSpace::unweighted(3).unwrap();
    let x = asset(
        &space,
        ImpactModel::LinearAdditive { a: 0.5 },
        &[80.0, 90.0, 100.0],
    );
    let risk = Risk::on(RiskFunctional::WorstCase, &space).unwrap();
    let affine = build_f(&x, &risk, &linspace(-100.0, 100.0, 401), ExitPolicy::Block).unwrap();
    let affine_err = biconjugate_check(&affine).unwrap().max_recovery_error;

    let mut levels = Vec::new();
    for n in [4097, 8193, 16385] {
        let f = build_f(
            &x,
            &risk,
            &linspace(-100.0, 100.0, n),
            ExitPolicy::Split(Quadrature::ClosedForm),
        )
        .unwrap();
        let pair = biconjugate_check(&f).unwrap();
        levels.push((n, pair.max_recovery_error, pair.error_bound, pair.convex));
    }
    let within = levels.iter().all(|&(_, e, b, c)| c && e <= b);
    let ratios: Vec<f64> = levels.windows(2).map(|w| w[1].2 / w[0].2).collect();
    let halves = ratios.iter().all(|r| (r - 0.5).abs() <= 0.05);
    let passed = affine_err <= 1e-9 && within && halves;
    let detail: Vec<String> = levels
        .iter()
        .map(|(n, e, b, _)| format!("n={n} err {e:.3e} <= bound {b:.3e}"))
        .collect();
    report(
        5,
        passed,
        &format!(
            "affine err {affine_err:.1e}; quadratic split {}; bound ratios {:.4}, {:.4}",
            detail.join(", "),
            ratios[0],
            ratios[1]
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_6_dual_representation() {
    let space = space5();
    let x = asset(&space, ImpactModel::LinearAdditive { a: 0.5 }, &X5);
    let ys = sampled_y(6, 10);
    let mut gap: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for (k, f) in CONVEX.iter().enumerate() {
        let risk = Risk::on(*f, &space).unwrap();
        for (j, &y) in ys.iter().enumerate() {
            let r = dual_check(&x, &risk, y, 1000, (10 * k + j) as u64).unwrap();
            gap = gap.max(r.gap.abs());
            excess = excess.max(r.max_sample_excess);
        }
    }
    let passed = gap <= 1e-9 && excess <= 1e-9;
    report(
        6,
        passed,
        &format!(
            "worst case, entropic, AVaR x 10 y: largest |sup - beta| {gap:.3e}, \
             largest sample excess {excess:.3e}"
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_lipschitz() {
    let space = ScenarioSpace::unweighted(3).unwrap();
    let risk = Risk::on(RiskFunctional::WorstCase, &space).unwrap();
    let linear = |a: f64, xs: &[f64]| asset(&space, ImpactModel::LinearAdditive { a }, xs);
    let xa = linear(0.5, &[80.0, 90.0, 100.0]);
    let xb = linear(1.0, &[50.0, 60.0, 40.0]);
    let xc = linear(0.3, &[70.0, 65.0, 75.0]);

    let uni = build_f(&xa, &risk, &linspace(-100.0, 100.0, 401), ExitPolicy::Block).unwrap();
    let ax = |n| linspace(-20.0, 20.0, n);
    let two = build_f_portfolio(
        &[xa.clone(), xb.clone()],
        &risk,
        &[ax(41), ax(41)],
        ExitPolicy::Block,
    )
    .unwrap();
    let three = build_f_portfolio(
        &[xa, xb, xc],
        &risk,
        &[ax(21), ax(21), ax(21)],
        ExitPolicy::Block,
    )
    .unwrap();

    let grid = linspace(-100.0, 100.0, 201);
    let s = (1.0 + 3f64.sqrt()) / 2.0;
    let tight = GridFunction::one_d(grid.clone(), grid.iter().map(|y| s * y).collect()).unwrap();

    let mut lines = Vec::new();
    let mut passed = true;
    for (name, f) in [("n=1", &uni), ("n=2", &two), ("n=3", &three)] {
        let r = lipschitz_check(f, 10_000, 7).unwrap();
        passed &= r.passed && r.max_ratio <= r.bound;
        lines.push(format!("{name} max {:.4} <= {:.4}", r.max_ratio, r.bound));
    }
    let r = lipschitz_check(&tight, 10_000, 7).unwrap();
    let floor = 0.99 * 2f64.sqrt();
    passed &= r.passed && r.max_ratio >= floor;
    lines.push(format!(
        "constructed affine max {:.4} >= {floor:.4}",
        r.max_ratio
    ));
    report(7, passed, &format!("10^4 pairs each: {}", lines.join("; ")));
    assert!(passed);
}

#[test]
fn criterion_8_split_dominance() {
    let space = ScenarioSpace::uniform(3).unwrap();
    let xs = [80.0, 90.0, 100.0];
    let curve = SupplyCurve::affine(70.0, 0.2).unwrap();
    let ys: Vec<f64> = (1..=400).map(|k| k as f64 * 0.25).collect();
    let mut failures = Vec::new();
    for f in [
        RiskFunctional::WorstCase,
        RiskFunctional::Entropic { lambda: 1.0 },
    ] {
        let risk = Risk::on(f, &space).unwrap();
        for m in [
            ImpactModel::LinearAdditive { a: 0.5 },
            ImpactModel::PowerLaw {
                gamma: 2.0,
                alpha: 0.5,
            },
        ] {
            let x = asset(&space, m, &xs);
            let mut count = 0;
            let mut first = None;
            for &y in &ys {
                let block = capital_requirement(
                    y,
                    beta(&x, &risk, y).unwrap(),
                    &curve,
                    CapitalPolicy::Block,
                )
                .unwrap()
                .capital_requirement;
                let split = capital_requirement(
                    y,
                    beta_split(&x, &risk, y, Quadrature::ClosedForm).unwrap(),
                    &curve,
                    CapitalPolicy::Split,
                )
                .unwrap()
                .capital_requirement;
                if split > block + 1e-9 {
                    count += 1;
                    first.get_or_insert((y, split - block));
                }
            }
            if let Some((y, d)) = first {
                failures.push(format!(
                    "{}/{}: {count} of {} points, first y={y} by {d:.4}",
                    f.name(),
                    x.model.name(),
                    ys.len()
                ));
            }
        }
    }

    let two = ScenarioSpace::unweighted(3).unwrap();
    let wc = Risk::on(RiskFunctional::WorstCase, &two).unwrap();
    let x1 = asset(&two, ImpactModel::LinearAdditive { a: 0.5 }, &xs);
    let x2 = asset(
        &two,
        ImpactModel::LinearAdditive { a: 1.0 },
        &[50.0, 60.0, 40.0],
    );
    let y = [10.0, 5.0];
    let assets = [x1.clone(), x2.clone()];
    let b = beta_portfolio(&assets, &wc, &y).unwrap();
    let sum = beta(&x1, &wc, y[0]).unwrap() + beta(&x2, &wc, y[1]).unwrap();
    let curves = [curve.clone(), SupplyCurve::affine(45.0, 0.5).unwrap()];
    let cap = |p| {
        portfolio_capital(&assets, &curves, &wc, &y, p, Quadrature::ClosedForm)
            .unwrap()
            .capital_requirement
    };
    let (pb, ps) = (cap(CapitalPolicy::Block), cap(CapitalPolicy::Split));
    let demo_ok = b == -120.0 && sum == -110.0 && ps <= pb;
    if !demo_ok {
        failures.push(format!(
            "portfolio demo beta {b}, sum {sum}, capital {ps} vs {pb}"
        ));
    }

    let passed = failures.is_empty();
    report(
        8,
        passed,
        &format!(
            "linear, power law x worst case, entropic(1) on 400 points in (0, 100]; \
             portfolio beta {b}, sum of betas {sum}, capital split {ps} <= block {pb}; \
             violations [{}]",
            failures.join("; ")
        ),
    );
    assert!(passed);
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run_cli(args: &[&str]) -> (u8, Vec<u8>) {
    let mut out = Vec::new();
    let code = illiq_cli::execute(
        std::iter::once("illiq").chain(args.iter().copied()),
        &mut out,
    );
    (code, out)
}

#[test]
fn criterion_9_cli_determinism() {
    let cases = [
        ("beta", "linear_worst_case.json"),
        ("beta", "gbm_avar.json"),
        ("axioms", "gbm_avar.json"),
        ("dual", "linear_worst_case.json"),
        ("dual", "power_law_block.json"),
        ("split-compare", "gbm_avar.json"),
        ("portfolio", "portfolio.json"),
    ];
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for (cmd, cfg) in cases {
        let path = config(cfg);
        for format in ["csv", "json"] {
            let args = [cmd, "--config", path.to_str().unwrap(), "--format", format];
            let first = run_cli(&args);
            let second = run_cli(&args);
            runs += 2;
            if first != second || first.1.is_empty() || first.0 > 1 {
                mismatches.push(format!("{cmd} {cfg} {format} (exit {})", first.0));
            }
        }
    }
    let passed = mismatches.is_empty();
    report(
        9,
        passed,
        &format!(
            "{runs} runs over 5 commands x 2 formats, non-identical [{}]",
            mismatches.join(", ")
        ),
    );
    assert!(passed);
}
