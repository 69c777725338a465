//! Composite Gauss–Legendre quadrature on intervals with known jump points.

use std::f64::consts::PI;

/// Points per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 16;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[start, start + period)` split at `breakpoints`
/// (taken modulo the period). About `nodes` evaluations in total, spread over
/// sub-intervals in proportion to their length, with at least one panel each.
/// Panels are summed in interval order, so the result is reproducible.
pub fn integrate_periodic<const K: usize>(
    f: impl Fn(f64) -> [f64; K],
    start: f64,
    period: f64,
    breakpoints: &[f64],
    nodes: usize,
) -> [f64; K] {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .map(|b| (b - start).rem_euclid(period))
        .filter(|&b| b > 0.0 && b < period)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend(cuts);
    edges.push(period);

    let (x, w) = gauss_legendre(PANEL_ORDER);
    let total_panels = (nodes / PANEL_ORDER).max(1);
    let mut acc = [0.0; K];
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let panels = ((total_panels as f64 * len / period).round() as usize).max(1);
        let step = len / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * step;
            let half = 0.5 * step;
            let mid = lo + half;
            for (xi, wi) in x.iter().zip(&w) {
                let v = f(start + mid + half * xi);
                for k in 0..K {
                    acc[k] += half * wi * v[k];
                }
            }
        }
    }
    acc
}
