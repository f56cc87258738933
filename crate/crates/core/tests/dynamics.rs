use std::f64::consts::PI;

use onsager_core::budget::{audit, audit_series, initial_time_limit, residual_from, BudgetClass, BudgetSource};
use onsager_core::fields::{energy, grad_norm_sq, Grid, GridField};
use onsager_core::solver::{run, taylor_green, SolverConfig, Trajectory};

fn single_mode(n: usize, nu: f64, dt: f64, t_end: f64) -> Trajectory {
    let g = Grid::periodic([n; 3]).unwrap();
    let v0 = GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
    run(&v0, &SolverConfig::new(nu, dt, t_end, [n; 3])).unwrap()
}

#[test]
fn zero_trajectory_has_zero_budget() {
    let g = Grid::periodic([8; 3]).unwrap();
    let t = run(&GridField::zeros(g), &SolverConfig::new(0.1, 0.1, 0.5, [8; 3])).unwrap();
    let b = audit(&t, 1e-6).unwrap();
    assert!(b.residual_d.iter().chain(&b.kinetic).chain(&b.dissip_cum).all(|x| *x == 0.0));
}

#[test]
fn single_mode_budget_matches_closed_form() {
    let nu = 0.1;
    let t = single_mode(16, nu, 0.01, 1.0);
    let b = audit(&t, 1e-6).unwrap();
    assert!(b.final_relative_residual().abs() <= 1e-6);
    assert_eq!(b.class, BudgetClass::Resolved);
    let c = (2.0 * PI).powi(3);
    let exact_k = c / 4.0 * (-2.0 * nu).exp();
    assert!((b.kinetic.last().unwrap() - exact_k).abs() <= 1e-10 * exact_k);
    let exact_d = c / 4.0 * (1.0 - (-2.0 * nu).exp());
    assert!((b.dissip_cum.last().unwrap() - exact_d).abs() <= 1e-6 * c / 4.0);
}

#[test]
fn taylor_green_energy_decays_monotonically() {
    let g = Grid::periodic([32; 3]).unwrap();
    let mut cfg = SolverConfig::new(0.1, 0.01, 2.0, [32; 3]);
    cfg.snapshot_stride = 50;
    let t = run(&taylor_green(g), &cfg).unwrap();
    assert_eq!(t.log.len(), 201);
    assert!(t.log.windows(2).all(|w| w[1].energy < w[0].energy));
    let b = audit(&t, 1e-6).unwrap();
    assert!(b.final_relative_residual().abs() <= 1e-4, "{}", b.final_relative_residual());
    assert!(b.stride_discrepancy.is_some());
}

#[test]
fn smooth_run_residual_is_independent_of_initial_time() {
    let t = single_mode(16, 0.1, 1e-3, 1.0);
    let k0 = t.log[0].energy;
    let s: Vec<f64> = (1..7).map(|j| 0.5f64.powi(j)).collect();
    let rows = initial_time_limit(&t, &s).unwrap();
    assert!(rows.iter().all(|r| r.gap <= 1e-8 * k0), "{rows:?}");
}

#[test]
fn initial_time_sequence_converges_monotonically() {
    let g = Grid::periodic([16; 3]).unwrap();
    let t = run(&taylor_green(g), &SolverConfig::new(0.05, 2.0 / 256.0, 2.0, [16; 3])).unwrap();
    let s: Vec<f64> = (1..9).map(|j| 2.0 / 2f64.powi(j)).collect();
    let rows = initial_time_limit(&t, &s).unwrap();
    let k0 = t.log[0].energy;
    for w in rows.windows(2) {
        assert!(w[1].gap <= w[0].gap + 1e-8 * k0, "{rows:?}");
    }
}

#[test]
fn dropping_an_early_snapshot_keeps_the_full_interval_value() {
    let g = Grid::periodic([32; 3]).unwrap();
    let mut cfg = SolverConfig::new(0.05, 0.01, 1.0, [32; 3]);
    cfg.snapshot_stride = 4;
    let traj = run(&taylor_green(g), &cfg).unwrap();
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.0).collect();
    let k: Vec<f64> = traj.snapshots.iter().map(|s| energy(&s.1)).collect();
    let gs: Vec<f64> = traj.snapshots.iter().map(|s| grad_norm_sq(&s.1).unwrap()).collect();
    let full = audit_series(&times, &k, &gs, cfg.nu, 1e-6, BudgetSource::Snapshots).unwrap();
    let full_d = *full.residual_d.last().unwrap();

    let keep: Vec<usize> = (0..times.len()).filter(|&i| i != 1).collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let (t2, k2, g2) = (pick(&times), pick(&k), pick(&gs));
    let limit = residual_from(&t2, &k2, &g2, cfg.nu, t2[0]).unwrap();
    assert!((limit - full_d).abs() <= 1e-5 * k[0], "{limit} vs {full_d}");
}
