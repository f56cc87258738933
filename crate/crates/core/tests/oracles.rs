//! Independent evaluations of the flux integrals, the mollifier and the
//! increment operator, compared with the library's spectral pipeline.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use onsager_core::commutator::{self, flux_terms, increment, remainder, viscous_split_bound};
use onsager_core::fields::{forward_transform, random_band_limited, synthesize_holder_field, Grid, GridField};
use onsager_core::holder::estimate_seminorm;
use onsager_core::mollify::{bump, mollify, BallRule, MollifierKernel};
use onsager_core::SynthesisSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Coeffs = HashMap<[i64; 3], [Complex64; 3]>;

fn norm(k: [i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `Σ a cos(k·x) + b sin(k·x)` over the canonical half of `{-1,0,1}³ \ 0`
/// with `a, b ⊥ k`, evaluated pointwise, plus its Fourier coefficients.
fn explicit_modes(seed: u64, grid: Grid) -> (GridField, Coeffs) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for k2 in -1i64..=1 {
        for k1 in -1i64..=1 {
            for k0 in -1i64..=1 {
                let k = [k0, k1, k2];
                let canonical = k2 > 0 || (k2 == 0 && (k1 > 0 || (k1 == 0 && k0 > 0)));
                if !canonical {
                    continue;
                }
                let kf = [k0 as f64, k1 as f64, k2 as f64];
                let mut draw = || cross(kf, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
                let a = draw();
                let b = draw();
                modes.push((k, a, b));
            }
        }
    }
    let v = GridField::from_fn(grid, |x| {
        let mut out = [0.0; 3];
        for (k, a, b) in &modes {
            let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
            for c in 0..3 {
                out[c] += a[c] * ph.cos() + b[c] * ph.sin();
            }
        }
        out
    });
    let mut coeffs = Coeffs::new();
    for (k, a, b) in &modes {
        let c: [Complex64; 3] = std::array::from_fn(|i| Complex64::new(a[i], -b[i]) / 2.0);
        coeffs.insert(*k, c);
        coeffs.insert([-k[0], -k[1], -k[2]], c.map(|z| z.conj()));
    }
    (v, coeffs)
}

fn coefficients_of(v: &GridField) -> Coeffs {
    let s = forward_transform(v).unwrap();
    let wn = s.wavenumbers();
    let mut out = Coeffs::new();
    for idx in 0..v.grid().len() {
        let c: [Complex64; 3] = std::array::from_fn(|i| s.component(i)[idx]);
        if c.iter().all(|z| z.norm() < 1e-14) {
            continue;
        }
        let k = wn.at(idx).map(|x| x.round() as i64);
        out.insert(k, c);
    }
    out
}

/// `vol Σ_{p+q=k} f(p,q) c_i(p) c_j(q) conj(i k_j ρ̂(k) c_i(k)) g(k)`, the
/// Parseval form of `∫ A : ∇v_ε` with `Â(k) = g(k) Σ f(p,q) c(p)⊗c(q)`.
fn triad_pairing(
    coeffs: &Coeffs,
    rho: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64, f64) -> f64,
    g: &dyn Fn(f64) -> f64,
) -> f64 {
    let vol = TAU.powi(3);
    let mut total = Complex64::new(0.0, 0.0);
    for (p, cp) in coeffs {
        for (q, cq) in coeffs {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            let Some(ck) = coeffs.get(&k) else { continue };
            let kn = norm(k);
            let w = f(norm(*p), norm(*q)) * g(kn) * rho(kn);
            for i in 0..3 {
                for j in 0..3 {
                    let b = Complex64::new(0.0, k[j] as f64) * ck[i];
                    total += w * cp[i] * cq[j] * b.conj();
                }
            }
        }
    }
    vol * total.re
}

fn check_against_triads(v: &GridField, coeffs: &Coeffs, eps: f64, tol: f64) {
    let kernel = MollifierKernel::for_grid(v.grid(), eps).unwrap();
    let rho = |k: f64| kernel.multiplier(k);
    let t = flux_terms(v, &kernel).unwrap();
    let total = triad_pairing(coeffs, &rho, &|_, _| 1.0, &rho);
    let smooth = triad_pairing(coeffs, &rho, &|p, q| rho(p) * rho(q), &|_| 1.0);
    let rough = triad_pairing(coeffs, &rho, &|p, q| (1.0 - rho(p)) * (1.0 - rho(q)), &|_| 1.0);
    assert!(total.abs() > 1e-6 && rough.abs() > 1e-12, "degenerate triads: {total} {rough}");
    let scale = total.abs().max(smooth.abs()).max(rough.abs());
    assert!((t.pi_total - total).abs() <= tol * scale, "eps {eps}: total {} vs {total}", t.pi_total);
    assert!((t.pi_smooth - smooth).abs() <= tol * scale, "eps {eps}: smooth {} vs {smooth}", t.pi_smooth);
    assert!((t.pi_rough - rough).abs() <= tol * scale, "eps {eps}: rough {} vs {rough}", t.pi_rough);
    let remainder = total - smooth + rough;
    assert!((t.pi_remainder - remainder).abs() <= 1e-8 * scale);
}

#[test]
fn flux_terms_match_triad_sums_on_explicit_modes() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let (v, coeffs) = explicit_modes(5, grid);
    // The pointwise evaluation and the analytic coefficients agree.
    let c = coefficients_of(&v);
    for (k, want) in &coeffs {
        let got = c[k];
        for i in 0..3 {
            assert!((got[i] - want[i]).norm() < 1e-13);
        }
    }
    for eps in [0.2, 0.5, 1.0] {
        check_against_triads(&v, &coeffs, eps, 1e-10);
    }
}

#[test]
fn flux_terms_match_triad_sums_on_random_field() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let v = random_band_limited(21, grid, 3.0).unwrap();
    let coeffs = coefficients_of(&v);
    for eps in [0.1, 0.3] {
        check_against_triads(&v, &coeffs, eps, 1e-8);
    }
}

#[test]
fn shear_flow_has_no_flux() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let v = GridField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0]);
    for eps in [0.1, 0.4, 1.0] {
        let t = flux_terms(&v, &MollifierKernel::for_grid(&grid, eps).unwrap()).unwrap();
        for x in [t.pi_total, t.pi_smooth, t.pi_remainder, t.pi_rough] {
            assert!(x.abs() < 1e-13, "{t:?}");
        }
    }
    let z = flux_terms(&GridField::zeros(grid), &MollifierKernel::for_grid(&grid, 0.3).unwrap()).unwrap();
    assert_eq!(z.max_term(), 0.0);
}

#[test]
fn galilean_shift_leaves_total_flux_unchanged() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let v = random_band_limited(8, grid, 4.0).unwrap();
    for eps in [0.1, 0.25] {
        let kernel = MollifierKernel::for_grid(&grid, eps).unwrap();
        let base = flux_terms(&v, &kernel).unwrap();
        let moved = flux_terms(&v.add_constant([0.7, -1.3, 0.4]), &kernel).unwrap();
        assert!((base.pi_total - moved.pi_total).abs() <= 1e-9, "{base:?} {moved:?}");
        assert!((base.pi_rough - moved.pi_rough).abs() <= 1e-9);
    }
}

/// `∫ρ_ε(y) cos(y₂) dy` in spherical shells with `ρ` normalized here from the
/// bare bump, by composite Simpson in `r`.
fn radial_factor(eps: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mass = simpson(&|r| bump(r) * 4.0 * PI * r * r);
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    simpson(&|r| bump(r) * 4.0 * PI * r * r * sinc(eps * r)) / mass
}

#[test]
fn mollified_sine_is_scaled_by_the_direct_transform() {
    let grid = Grid::periodic([32; 3]).unwrap();
    let u = GridField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0]);
    for eps in [0.1, 0.3, 0.7, 1.0] {
        let ue = mollify(&u, &MollifierKernel::for_grid(&grid, eps).unwrap()).unwrap();
        let factor = radial_factor(eps);
        let expect = u.scale(factor);
        assert!(ue.max_abs_diff(&expect) < 1e-8, "eps {eps}: factor {factor}");
    }
}

#[test]
fn constant_is_fixed_by_mollification() {
    let grid = Grid::periodic([8; 3]).unwrap();
    let u = GridField::zeros(grid).add_constant([1.5, -2.0, 0.25]);
    let ue = mollify(&u, &MollifierKernel::for_grid(&grid, 0.6).unwrap()).unwrap();
    assert!(ue.max_abs_diff(&u) < 1e-15);
}

#[test]
fn spectral_mollify_matches_real_space_sum() {
    // Band-limited field evaluated exactly off-lattice; the convolution is a
    // lattice Riemann sum over the ball, spectrally accurate for the bump.
    let grid = Grid::periodic([16; 3]).unwrap();
    let (u, coeffs) = explicit_modes(13, grid);
    let eps = 0.3;
    let kernel = MollifierKernel::for_grid(&grid, eps).unwrap();
    let ue = mollify(&u, &kernel).unwrap();
    let eval = |x: [f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, c) in &coeffs {
            let e = Complex64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
            for i in 0..3 {
                out[i] += (c[i] * e).re;
            }
        }
        out
    };
    let m = 24i64;
    let h = eps / m as f64;
    let mut nodes = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                let y = [a as f64 * h, b as f64 * h, c as f64 * h];
                let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                if r < eps {
                    nodes.push((y, kernel.scaled(r) * h * h * h));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..6 {
        let ijk = [rng.gen_range(0..16), rng.gen_range(0..16), rng.gen_range(0..16)];
        let x = grid.coords(ijk[0], ijk[1], ijk[2]);
        let mut direct = [0.0; 3];
        for (y, w) in &nodes {
            let val = eval([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
            for i in 0..3 {
                direct[i] += w * val[i];
            }
        }
        let got = ue.at(grid.index(ijk[0], ijk[1], ijk[2]));
        for i in 0..3 {
            assert!((got[i] - direct[i]).abs() < 1e-6, "{ijk:?}: {got:?} vs {direct:?}");
        }
    }
}

#[test]
fn lattice_increments_equal_rolls() {
    let grid = Grid::periodic([16, 12, 8]).unwrap();
    let u = random_band_limited(3, grid, 4.0).unwrap();
    let h = grid.spacing();
    for m in [[1i64, 0, 0], [0, -3, 2], [5, 4, -7], [16, 0, 0]] {
        let y = [m[0] as f64 * h[0], m[1] as f64 * h[1], m[2] as f64 * h[2]];
        let d = increment(&u, y).unwrap();
        let expect = u.roll([-m[0], -m[1], -m[2]]).sub(&u);
        let alt = u.roll(m).sub(&u);
        let err = d.max_abs_diff(&expect).min(d.max_abs_diff(&alt));
        assert!(err <= 1e-12, "{m:?}: {err}");
    }
    let sine = GridField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0]);
    let d = increment(&sine, [0.0, PI, 0.0]).unwrap();
    assert!(d.max_abs_diff(&sine.scale(-2.0)) < 1e-12);
}

#[test]
fn remainder_examples() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let kernel = MollifierKernel::for_grid(&grid, 0.4).unwrap();
    let c = GridField::zeros(grid).add_constant([1.0, 2.0, 3.0]);
    assert!(remainder(&c, &kernel, BallRule::default()).unwrap().max_abs() < 1e-14);

    let sine = GridField::from_fn(grid, |x| [x[1].sin(), 0.0, 0.0]);
    let r = remainder(&sine, &kernel, BallRule::default()).unwrap();
    assert!(r.component(0, 0).iter().any(|v| v.abs() > 1e-3));
    for (i, j) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
        assert!(r.component(i, j).iter().all(|v| v.abs() < 1e-15), "({i},{j})");
    }

    // Pointwise the remainder is a positive semi-definite tensor.
    let v = random_band_limited(4, grid, 4.0).unwrap();
    let r = remainder(&v, &kernel, BallRule::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let idx = rng.gen_range(0..grid.len());
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        assert!(r.quadratic_form(idx, w) >= -1e-14);
    }
}

#[test]
fn remainder_quadrature_refinement() {
    let grid = Grid::periodic([16; 3]).unwrap();
    let v = random_band_limited(9, grid, 4.0).unwrap();
    let kernel = MollifierKernel::for_grid(&grid, 0.1).unwrap();
    let coarse = commutator::remainder_pairing(&v, &kernel, BallRule::cube(7)).unwrap();
    let fine = commutator::remainder_pairing(&v, &kernel, BallRule::cube(11)).unwrap();
    assert!((coarse - fine).abs() <= 1e-6 * fine.abs(), "{coarse} vs {fine}");
}

#[test]
fn split_bound_holds() {
    let grid = Grid::periodic([32; 3]).unwrap();
    let zero = viscous_split_bound(&GridField::zeros(grid), &MollifierKernel::for_grid(&grid, 0.1).unwrap(), 0.5, 0.0)
        .unwrap();
    assert_eq!((zero.bound, zero.pi_rough), (0.0, 0.0));

    // Lipschitz single mode: the seminorm is sup|u'| = 1.
    let sine = GridField::from_fn(grid, |x| [0.0, 0.0, x[0].sin() + x[1].cos()]);
    let est = estimate_seminorm(&sine, 1.0, PI / 2.0).unwrap();
    let b = viscous_split_bound(&sine, &MollifierKernel::for_grid(&grid, 0.2).unwrap(), 1.0, est.seminorm).unwrap();
    assert!(b.bound.is_finite() && !b.violated && b.pi_rough.abs() <= b.bound);

    let v = synthesize_holder_field(&SynthesisSpec::full_band(0.5, 2, &grid), grid).unwrap();
    let est = estimate_seminorm(&v, 0.5, PI / 2.0).unwrap();
    let b = viscous_split_bound(&v, &MollifierKernel::for_grid(&grid, 0.1).unwrap(), 0.5, est.seminorm).unwrap();
    assert!(!b.violated && b.pi_rough.abs() <= b.bound, "{b:?}");
    assert!(b.tight_bound <= b.bound);
}
