use illiq_wasm::{curves, gbm_var, round_trip};

#[test]
fn linear_worst_case_row() {
    let rows = curves(
        "80, 90, 100",
        "linear",
        0.5,
        "worst_case",
        0.0,
        (70.0, 0.2),
        10.0,
        1,
    )
    .unwrap();
    // y, beta, split, block capital, split capital
    assert_eq!(rows, vec![10.0, -75.0, -775.0, -30.0, -55.0]);
}

#[test]
fn curve_has_five_columns_per_point() {
    let rows = curves(
        "80 90 100",
        "power_law",
        2.0,
        "avar",
        0.4,
        (70.0, 0.0),
        50.0,
        25,
    )
    .unwrap();
    assert_eq!(rows.len(), 125);
    for r in rows.chunks(5) {
        assert!(
            r[4] <= r[3] + 1e-9,
            "split capital above block at y = {}",
            r[0]
        );
    }
}

#[test]
fn affine_round_trip_is_exact() {
    let out = round_trip("80,90,100", "linear", 0.5, "worst_case", 0.0, 100.0, 201).unwrap();
    assert_eq!(out[0], 1.0);
    assert!(out[1] <= 1e-9);
    assert_eq!(out.len(), 3 + 3 * 201);
}

#[test]
fn power_law_round_trip_is_flagged() {
    let out = round_trip("80,90,100", "power_law", 2.0, "worst_case", 0.0, 50.0, 101).unwrap();
    assert_eq!(out[0], 0.0);
}

#[test]
fn gbm_var_matches_closed_form() {
    let v = gbm_var(100.0, 0.05, 0.2, 1.0, 0.05, 200_000, 1).unwrap();
    assert!((v[0] + 74.1581118615058).abs() < 1e-9);
    assert!((v[1] - v[0]).abs() / v[0].abs() < 0.01);
}

#[test]
fn bad_input_is_reported() {
    assert!(curves(
        "80, abc",
        "linear",
        0.5,
        "worst_case",
        0.0,
        (70.0, 0.2),
        10.0,
        5
    )
    .is_err());
    assert!(curves("80", "linear", 0.5, "median", 0.0, (70.0, 0.2), 10.0, 5).is_err());
    assert!(round_trip("80", "linear", 0.5, "worst_case", 0.0, 10.0, 10).is_err());
    assert!(gbm_var(100.0, 0.05, 0.2, 1.0, 1.5, 10, 1).is_err());
}
