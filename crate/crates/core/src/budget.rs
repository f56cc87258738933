//! Energy-budget audits of solver trajectories:
//! `D(t) = ½‖v(0)‖² - ½‖v(t)‖² - ν ∫₀ᵗ ‖∇v‖²`, the cumulative dissipation not
//! accounted for by viscosity, and its limit as the initial time `s → 0⁺`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{energy, grad_norm_sq};
use crate::solver::Trajectory;
use crate::stats;

/// Default relative tolerance for resolved runs.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Where the audited energies came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSource {
    StepLog,
    Snapshots,
}

/// Reading of the final residual against the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetClass {
    /// `|D| ≤ tol · E(0)`: purely viscous dissipation.
    Resolved,
    /// `D > tol · E(0)`: energy lost beyond viscosity.
    Anomalous,
    /// `D < -tol · E(0)`: energy gained, which no Leray–Hopf analogue allows;
    /// read as under-resolution.
    UnderResolved,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub nu: f64,
    pub source: BudgetSource,
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub dissip_cum: Vec<f64>,
    pub residual_d: Vec<f64>,
    pub relative_residual: Vec<f64>,
    pub tolerance: f64,
    pub class: BudgetClass,
    /// `|dissip_cum(T)|` from snapshots minus the same from the step log,
    /// when both are available.
    pub stride_discrepancy: Option<f64>,
}

impl EnergyBudget {
    pub fn final_relative_residual(&self) -> f64 {
        *self.relative_residual.last().unwrap_or(&0.0)
    }

    /// CSV with header `t,kinetic,dissip_cum,residual_D`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,kinetic,dissip_cum,residual_D\n");
        for i in 0..self.times.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.times[i], self.kinetic[i], self.dissip_cum[i], self.residual_d[i]
            ));
        }
        s
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::invalid("a budget needs at least two samples"));
    }
    let up = times.windows(2).all(|w| w[1] > w[0]);
    let down = times.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid("sample times must be strictly monotone"));
    }
    Ok(())
}

/// Budget from sampled `½‖v‖²` and `‖∇v‖²`.
pub fn audit_series(
    times: &[f64],
    kinetic: &[f64],
    grad_sq: &[f64],
    nu: f64,
    tolerance: f64,
    source: BudgetSource,
) -> Result<EnergyBudget> {
    check_times(times)?;
    if kinetic.len() != times.len() || grad_sq.len() != times.len() {
        return Err(Error::invalid("budget series have mismatched lengths"));
    }
    let rate: Vec<f64> = grad_sq.iter().map(|g| nu * g).collect();
    let dissip_cum = stats::cumulative_trapezoid(times, &rate);
    let k0 = kinetic[0];
    let residual_d: Vec<f64> = (0..times.len()).map(|i| k0 - kinetic[i] - dissip_cum[i]).collect();
    let relative_residual: Vec<f64> = residual_d
        .iter()
        .map(|r| if k0 == 0.0 { 0.0 } else { r / k0 })
        .collect();
    let last = *relative_residual.last().unwrap();
    let class = if last.abs() <= tolerance {
        BudgetClass::Resolved
    } else if last > 0.0 {
        BudgetClass::Anomalous
    } else {
        BudgetClass::UnderResolved
    };
    Ok(EnergyBudget {
        nu,
        source,
        times: times.to_vec(),
        kinetic: kinetic.to_vec(),
        dissip_cum,
        residual_d,
        relative_residual,
        tolerance,
        class,
        stride_discrepancy: None,
    })
}

fn snapshot_series(traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut t = Vec::new();
    let mut k = Vec::new();
    let mut g = Vec::new();
    for (time, v) in &traj.snapshots {
        t.push(*time);
        k.push(energy(v));
        g.push(grad_norm_sq(v)?);
    }
    Ok((t, k, g))
}

/// Audit from snapshots only.
pub fn audit_snapshots(traj: &Trajectory, tolerance: f64) -> Result<EnergyBudget> {
    let (t, k, g) = snapshot_series(traj)?;
    audit_series(&t, &k, &g, traj.config.nu, tolerance, BudgetSource::Snapshots)
}

/// Audit using the per-step log when it has at least two entries, otherwise
/// the snapshots. With both available the snapshot-based dissipation is
/// reported alongside as `stride_discrepancy`.
pub fn audit(traj: &Trajectory, tolerance: f64) -> Result<EnergyBudget> {
    if traj.log.len() < 2 {
        return audit_snapshots(traj, tolerance);
    }
    let t: Vec<f64> = traj.log.iter().map(|l| l.t).collect();
    let k: Vec<f64> = traj.log.iter().map(|l| l.energy).collect();
    let g: Vec<f64> = traj.log.iter().map(|l| l.grad_sq).collect();
    let mut b = audit_series(&t, &k, &g, traj.config.nu, tolerance, BudgetSource::StepLog)?;
    if traj.snapshots.len() >= 2 {
        let snap = audit_snapshots(traj, tolerance)?;
        let t_snap = *snap.times.last().unwrap();
        let at = interpolate(&b.times, &b.dissip_cum, t_snap);
        b.stride_discrepancy = Some((snap.dissip_cum.last().unwrap() - at).abs());
    }
    Ok(b)
}

fn interpolate(t: &[f64], f: &[f64], s: f64) -> f64 {
    let i = t.partition_point(|x| *x <= s).clamp(1, t.len() - 1);
    let (t0, t1) = (t[i - 1], t[i]);
    let w = if t1 == t0 { 0.0 } else { (s - t0) / (t1 - t0) };
    f[i - 1] + w * (f[i] - f[i - 1])
}

/// `D` over `[s, T]` for one initial time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub s: f64,
    pub residual: f64,
    /// `|residual(s) - residual(t₀)|` with `t₀` the first sample time.
    pub gap: f64,
}

/// Residual over `[s, T]` from increasing samples, linear interpolation
/// of the energy and of the dissipation rate at `s`.
pub fn residual_from(times: &[f64], kinetic: &[f64], grad_sq: &[f64], nu: f64, s: f64) -> Result<f64> {
    check_times(times)?;
    if times[1] < times[0] {
        return Err(Error::invalid("initial-time limits need increasing times"));
    }
    let t_end = *times.last().unwrap();
    if s < times[0] || s > t_end {
        return Err(Error::invalid(format!(
            "s = {s} outside the data range [{}, {t_end}]",
            times[0]
        )));
    }
    let i = times.partition_point(|x| *x <= s);
    let mut t = vec![s];
    let mut g = vec![interpolate(times, grad_sq, s)];
    for j in i..times.len() {
        if times[j] > s {
            t.push(times[j]);
            g.push(grad_sq[j]);
        }
    }
    let k_s = interpolate(times, kinetic, s);
    let rate: Vec<f64> = g.iter().map(|x| nu * x).collect();
    Ok(k_s - kinetic.last().unwrap() - stats::trapezoid(&t, &rate))
}

/// Residuals over `[s, T]` along a decreasing `s` sequence.
pub fn initial_time_limit(traj: &Trajectory, s_list: &[f64]) -> Result<Vec<LimitRow>> {
    let (t, k, g) = if traj.log.len() >= 2 {
        (
            traj.log.iter().map(|l| l.t).collect(),
            traj.log.iter().map(|l| l.energy).collect(),
            traj.log.iter().map(|l| l.grad_sq).collect(),
        )
    } else {
        snapshot_series(traj)?
    };
    initial_time_limit_series(&t, &k, &g, traj.config.nu, s_list)
}

pub fn initial_time_limit_series(
    times: &[f64],
    kinetic: &[f64],
    grad_sq: &[f64],
    nu: f64,
    s_list: &[f64],
) -> Result<Vec<LimitRow>> {
    if s_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("s_list must be strictly decreasing"));
    }
    let full = residual_from(times, kinetic, grad_sq, nu, times[0])?;
    s_list
        .iter()
        .map(|&s| {
            let r = residual_from(times, kinetic, grad_sq, nu, s)?;
            Ok(LimitRow {
                s,
                residual: r,
                gap: (r - full).abs(),
            })
        })
        .collect()
}
