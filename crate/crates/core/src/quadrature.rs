//! Gauss rules: Legendre, and Gauss rules for a tabulated positive weight
//! built by the discretized Stieltjes procedure plus Golub–Welsch.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|t| half * t).collect(),
    )
}

/// `n`-point Gauss rule for `∫_a^b weight(x) f(x) dx`.
///
/// The weight is discretized by a `fine`-point Gauss–Legendre rule; the
/// recurrence coefficients of the orthonormal polynomials follow from the
/// Stieltjes procedure and the nodes from the Jacobi matrix eigenproblem.
pub fn gauss_for_weight(
    n: usize,
    a: f64,
    b: f64,
    fine: usize,
    weight: impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || fine < 2 * n {
        return Err(Error::invalid("gauss_for_weight needs n >= 1 and fine >= 2n"));
    }
    let (xs, ws) = gauss_legendre_on(fine, a, b);
    let mw: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| w * weight(x)).collect();
    if mw.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("weight must be finite and non-negative"));
    }
    let mu0: f64 = mw.iter().sum();
    if mu0 <= 0.0 {
        return Err(Error::invalid("weight has zero mass"));
    }

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut p_prev = vec![0.0; fine];
    let mut p = vec![1.0 / mu0.sqrt(); fine];
    for k in 0..n {
        alpha[k] = (0..fine).map(|i| mw[i] * xs[i] * p[i] * p[i]).sum();
        if k + 1 == n {
            break;
        }
        let mut q: Vec<f64> = (0..fine)
            .map(|i| (xs[i] - alpha[k]) * p[i] - beta[k] * p_prev[i])
            .collect();
        // one pass of re-orthogonalization against the two previous polynomials
        let c0: f64 = (0..fine).map(|i| mw[i] * q[i] * p[i]).sum();
        let c1: f64 = (0..fine).map(|i| mw[i] * q[i] * p_prev[i]).sum();
        for i in 0..fine {
            q[i] -= c0 * p[i] + c1 * p_prev[i];
        }
        let b = (0..fine).map(|i| mw[i] * q[i] * q[i]).sum::<f64>().sqrt();
        if b <= 0.0 || !b.is_finite() {
            return Err(Error::invalid("Stieltjes procedure broke down; increase `fine`"));
        }
        beta[k + 1] = b;
        p_prev = std::mem::replace(&mut p, q.iter().map(|v| v / b).collect());
    }

    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = alpha[k];
        if k + 1 < n {
            jac[(k, k + 1)] = beta[k + 1];
            jac[(k + 1, k)] = beta[k + 1];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], mu0 * eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn legendre_high_order_weights_sum_to_two() {
        for n in [1, 2, 33, 200, 1024] {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn custom_weight_reproduces_legendre_for_unit_weight() {
        let (x, w) = gauss_for_weight(6, -1.0, 1.0, 200, |_| 1.0).unwrap();
        let (xl, wl) = gauss_legendre(6);
        for i in 0..6 {
            assert!((x[i] - xl[i]).abs() < 1e-13);
            assert!((w[i] - wl[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn custom_weight_moments_are_exact() {
        // weight r^2 on [0, 1]: moments 1/(k+3)
        let (x, w) = gauss_for_weight(5, 0.0, 1.0, 400, |r| r * r).unwrap();
        for k in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 3.0)).abs() < 1e-14);
        }
    }
}
