//! Reference values for the acceptance suite.
//!
//! Everything here is computed from first principles on plain slices, without
//! going through `illiq-core`, so the suite compares two independent routes.

/// `VaR_{0.05}` of a GBM price with `X_0 = 100`, `μ = 0.05`, `σ = 0.2`, `T = 1`,
/// evaluated with an external statistics package.
pub const GBM_VAR_DEMO: f64 = -74.1581118615058;

/// `-min z`.
pub fn worst_case(z: &[f64]) -> f64 {
    -z.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `-q` with `q` the largest scenario value such that `P(Z < q) <= δ`.
pub fn var(z: &[f64], p: &[f64], delta: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &q in z {
        let below: f64 = z
            .iter()
            .zip(p)
            .filter(|(v, _)| **v < q)
            .map(|(_, w)| w)
            .sum();
        if below <= delta + 1e-12 && q > best {
            best = q;
        }
    }
    -best
}

/// Probability-weighted average of the worst `δ` mass, negated.
pub fn avar(z: &[f64], p: &[f64], delta: f64) -> f64 {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let mut left = delta;
    let mut acc = 0.0;
    for i in idx {
        let take = p[i].min(left);
        acc += take * z[i];
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    -acc / delta
}

/// `(1/λ) ln E[exp(-λ Z)]` via log-sum-exp.
pub fn entropic(z: &[f64], p: &[f64], lambda: f64) -> f64 {
    let m = z
        .iter()
        .map(|v| -lambda * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z
        .iter()
        .zip(p)
        .map(|(v, w)| w * (-lambda * v - m).exp())
        .sum();
    (m + s.ln()) / lambda
}
