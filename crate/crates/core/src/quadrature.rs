//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [-1, 1], nodes
/// ascending. Exact for polynomials of degree ≤ 2m − 1.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = x;
        nodes[i] = -x;
        weights[m - 1 - i] = w;
        weights[i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule mapped to (0, 1); weights sum to 1.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    (
        x.into_iter().map(|x| 0.5 * (x + 1.0)).collect(),
        w.into_iter().map(|w| 0.5 * w).collect(),
    )
}

/// Largest gap between consecutive nodes of a rule on (0, 1), counting the
/// gaps to both endpoints.
pub fn max_spacing(nodes: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut gap: f64 = 0.0;
    for &x in nodes {
        gap = gap.max(x - prev);
        prev = x;
    }
    gap.max(1.0 - prev)
}
