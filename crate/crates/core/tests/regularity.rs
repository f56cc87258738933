use std::f64::consts::TAU;

use onsager_core::channel::{horizontal_zeta2, synthesize_channel_field};
use onsager_core::commutator::FluxOptions;
use onsager_core::fields::{synthesize_holder_field, Grid, GridField, SynthesisSpec};
use onsager_core::flux::{sweep, sweep_omega, VerdictRule};
use onsager_core::holder::{estimate_seminorm, estimate_seminorm_omega, estimate_zeta2, quarter_period, Modulus};
use onsager_core::mollify::{check_conv_estimates, check_conv_estimates_omega};

fn field(alpha: f64, seed: u64, n: usize) -> GridField {
    let g = Grid::periodic([n; 3]).unwrap();
    synthesize_holder_field(&SynthesisSpec::full_band(alpha, seed, &g), g).unwrap()
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

#[test]
fn synthesized_exponent_is_reproducible_across_seeds() {
    let a = field(0.5, 1, 64);
    let b = field(0.5, 2, 64);
    assert!(a.max_abs_diff(&b) > 0.1);
    let za = estimate_zeta2(&a).unwrap().holder_proxy;
    let zb = estimate_zeta2(&b).unwrap().holder_proxy;
    assert!((0.40..=0.60).contains(&za), "{za}");
    assert!((za - zb).abs() <= 0.05, "{za} vs {zb}");
}

#[test]
fn single_shell_field_is_lipschitz() {
    let g = Grid::periodic([32; 3]).unwrap();
    let u = synthesize_holder_field(&SynthesisSpec::new(0.3, 4, 1.0, 1.0), g).unwrap();
    let e = estimate_seminorm(&u, 1.0, quarter_period(&u)).unwrap();
    assert!(e.seminorm.is_finite() && e.seminorm > 0.0);
    assert!(!e.diverging, "{:?}", e.ratio_slope);
}

#[test]
fn unit_modulus_reduces_to_plain_estimates() {
    let u = field(0.5, 6, 32);
    let eps = dyadic(2, 5);
    let plain = check_conv_estimates(&u, 0.5, 1.3, &eps).unwrap();
    let omega = check_conv_estimates_omega(&u, 0.5, &Modulus::Constant, 1.3, &eps).unwrap();
    assert_eq!(plain.rows, omega.rows);
    let zero = check_conv_estimates(&GridField::zeros(*u.grid()), 0.5, 1.0, &eps).unwrap();
    assert!(zero.rows.iter().all(|r| r.sup_diff == 0.0 && r.sup_grad == 0.0));
}

#[test]
fn modulus_refined_estimates_stay_bounded() {
    // α = 1/3 with ω(s) = s^0.1 on a field of exponent 0.45 > 1/3 + 0.1.
    let u = field(0.45, 3, 32);
    let alpha = 1.0 / 3.0;
    let omega = Modulus::Power { theta: 0.1 };
    let est = estimate_seminorm_omega(&u, alpha, &omega, quarter_period(&u)).unwrap();
    assert!(est.seminorm.is_finite() && !est.diverging);
    let t = check_conv_estimates_omega(&u, alpha, &omega, est.seminorm, &dyadic(2, 6)).unwrap();
    assert!(t.max_ratio1() <= 1.1, "{}", t.max_ratio1());
    assert!(t.max_ratio2() <= t.grad_constant * 1.1, "{} vs {}", t.max_ratio2(), t.grad_constant);

    let g = Grid::periodic([32; 3]).unwrap();
    let smooth = GridField::from_fn(g, |x| [x[1].sin(), 0.0, x[0].cos()]);
    let est = estimate_seminorm_omega(&smooth, 0.5, &Modulus::Log, quarter_period(&smooth)).unwrap();
    let t = check_conv_estimates_omega(&smooth, 0.5, &Modulus::Log, est.seminorm, &dyadic(2, 6)).unwrap();
    assert!(t.max_ratio1() <= 1.1 && t.max_ratio2().is_finite());
}

#[test]
fn constant_modulus_sweep_coincides_with_plain_sweep() {
    let u = field(0.6, 2, 16);
    let eps = dyadic(2, 5);
    let opts = FluxOptions::default();
    // The plain sweep needs η inside the open interval; rows and slopes do not depend on it.
    let plain = sweep(&u, 0.6, &eps, 2.0, &opts, VerdictRule::default()).unwrap();
    let omega = sweep_omega(&u, 0.6, &Modulus::Constant, &eps, &opts, VerdictRule::default()).unwrap();
    assert_eq!(plain.rows, omega.rows);
    assert_eq!(plain.fitted_slopes, omega.fitted_slopes);
    assert!(omega.gamma_theory.abs() < 1e-15);
}

#[test]
fn endpoint_sweep_with_modulus_is_bounded() {
    let u = field(0.45, 5, 32);
    let omega = Modulus::Power { theta: 0.1 };
    let r = sweep_omega(&u, 1.0 / 3.0, &omega, &dyadic(2, 6), &FluxOptions::default(), VerdictRule::default()).unwrap();
    let fit = r.omega.unwrap();
    assert!((r.eta - 2.0).abs() < 1e-15);
    assert!(fit.bounded, "{:?}", fit.ratios);

    let g = Grid::periodic([16; 3]).unwrap();
    let smooth = GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
    let r = sweep_omega(&smooth, 1.0 / 3.0, &Modulus::Log, &dyadic(2, 5), &FluxOptions::default(), VerdictRule::default())
        .unwrap();
    assert!(r.omega.unwrap().ratios.iter().all(|x| *x < 1e-10));
}

#[test]
fn channel_midplane_exponent_tracks_target() {
    let grid = Grid::channel([64, 64, 33], [TAU, TAU, 1.0]).unwrap();
    for seed in [1, 2] {
        let v = synthesize_channel_field(&SynthesisSpec::new(0.5, seed, 1.0, 31.0), grid).unwrap();
        let z = horizontal_zeta2(&v, 16).unwrap();
        assert!((z.holder_proxy - 0.5).abs() <= 0.15, "seed {seed}: {}", z.holder_proxy);
    }
}
