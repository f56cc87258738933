//! Small numeric helpers shared across modules.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Order-independent sum: fixed chunking, partial sums reduced sequentially,
/// so the result does not depend on the thread count.
pub(crate) fn det_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values.par_chunks(CHUNK).map(|c| c.iter().sum()).collect();
    partials.iter().sum()
}

/// Deterministic parallel sum of `f(i)` for `i in 0..n`.
pub(crate) fn det_sum_by(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    partials.iter().sum()
}

/// Weighted least-squares slope of `y` against `x`.
pub(crate) fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.len() != w.len() {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

pub(crate) fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    weighted_slope(x, y, &vec![1.0; x.len()])
}

/// Trapezoid rule over possibly non-uniform abscissae.
pub(crate) fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tt, ff)| 0.5 * (tt[1] - tt[0]) * (ff[0] + ff[1]))
        .sum()
}

/// Running trapezoid integral, starting at 0.
pub(crate) fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    if !t.is_empty() {
        out.push(0.0);
    }
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}
