//! ε-sweeps of the flux terms, log-log decay fits against `γ = αη + α - 1`,
//! and the scaling identity behind the viscous criterion.

use serde::{Deserialize, Serialize};

use crate::commutator::{flux_terms_with, FluxOptions, FluxTerms};
use crate::error::{Error, Result};
use crate::fields::{Geometry, GridField};
use crate::holder::{admissible_eta, gamma, Modulus};
use crate::mollify::MollifierKernel;
use crate::stats;

/// Values below this are round-off and are left out of log fits.
pub const FIT_CLAMP: f64 = 1e-13;
/// Minimum number of ε values in a sweep and in the asymptotic fit window.
pub const MIN_FIT_POINTS: usize = 4;

/// Thresholds behind the conserving verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    /// Fitted `|pi_total|` slope must exceed this.
    pub min_slope: f64,
    /// Terminal `|pi_total|` must be at most this fraction of the sweep maximum.
    pub relative_floor: f64,
    /// Sweeps whose every `|pi_total|` is below this are conserving outright.
    pub absolute_floor: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule {
            min_slope: 0.0,
            relative_floor: 0.5,
            absolute_floor: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub conserving: bool,
    pub slope_ok: bool,
    pub terminal_ok: bool,
    pub rule: VerdictRule,
}

/// Fitted log-log slopes against `ε`; `None` when fewer than two usable points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub pi_total: Option<f64>,
    pub pi_remainder: Option<f64>,
    pub pi_rough: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FluxSweepReport {
    pub alpha: f64,
    pub eta: f64,
    pub gamma_theory: f64,
    /// `η` lies outside the admissible interval (`α ≤ 1/3`).
    pub eta_forced: bool,
    pub geometry: Geometry,
    /// Rows sorted by decreasing `ε`. For time series the terms are
    /// trapezoid integrals of their absolute values over the snapshots.
    pub rows: Vec<FluxTerms>,
    /// Number of smallest-ε rows entering the fits.
    pub fit_window: usize,
    pub fitted_slopes: Slopes,
    pub verdict: Verdict,
    /// Present for ω-refined sweeps.
    pub omega: Option<OmegaFit>,
}

/// `|pi_total| / (ω(ε)^{1+η} ε^γ)` per row and its boundedness test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaFit {
    pub modulus: Modulus,
    pub ratios: Vec<f64>,
    /// Slope of `log|pi_total|` against `log(ω(ε)^{1+η} ε^γ)`.
    pub slope: Option<f64>,
    /// Bounded when the largest ratio in the fit window is at most
    /// `bounded_factor` times the largest ratio outside it.
    pub bounded_factor: f64,
    pub bounded: bool,
}

/// Default `bounded_factor` of [`OmegaFit`].
pub const BOUNDED_FACTOR: f64 = 2.0;

impl FluxSweepReport {
    /// CSV with header `geometry,epsilon,pi_total,pi_smooth,pi_remainder,pi_rough,residual,nodes[,ratio]`.
    pub fn to_csv(&self) -> String {
        let geometry = match self.geometry {
            Geometry::Periodic3 => "periodic3",
            Geometry::Channel => "channel",
        };
        let mut s = String::from("geometry,epsilon,pi_total,pi_smooth,pi_remainder,pi_rough,residual,nodes");
        if self.omega.is_some() {
            s.push_str(",ratio");
        }
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            s.push_str(&format!(
                "{geometry},{},{},{},{},{},{},{}",
                r.epsilon, r.pi_total, r.pi_smooth, r.pi_remainder, r.pi_rough, r.residual, r.nodes
            ));
            if let Some(o) = &self.omega {
                s.push_str(&format!(",{}", o.ratios[i]));
            }
            s.push('\n');
        }
        s
    }
}

fn sorted_eps(eps_list: &[f64]) -> Result<Vec<f64>> {
    if eps_list.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "a sweep needs at least {MIN_FIT_POINTS} values of epsilon, got {}",
            eps_list.len()
        )));
    }
    let mut eps = eps_list.to_vec();
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::invalid("epsilon values must be positive"));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("epsilon values must be distinct"));
    }
    Ok(eps)
}

fn resolve_eta(alpha: f64, eta: f64) -> Result<(f64, bool)> {
    let interval = admissible_eta(alpha)?;
    if interval.empty {
        log::warn!("alpha = {alpha} admits no eta; forcing eta = {eta}, decay is not expected");
        return Ok((gamma(alpha, eta), true));
    }
    if !interval.contains(eta) {
        return Err(Error::invalid(format!(
            "eta = {eta} lies outside ({}, {}] for alpha = {alpha}",
            interval.lower, interval.upper
        )));
    }
    Ok((interval.gamma(eta), false))
}

/// Weighted least-squares slope of `log|y|` against `log x` over the last
/// `window` rows (smallest ε), weights `1/ε`, clamped values skipped.
fn fit(eps: &[f64], x: &[f64], y: &[f64], window: usize) -> Option<f64> {
    let start = eps.len() - window;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut w = Vec::new();
    for i in start..eps.len() {
        if y[i].abs() < FIT_CLAMP || x[i] <= 0.0 {
            continue;
        }
        lx.push(x[i].ln());
        ly.push(y[i].abs().ln());
        w.push(1.0 / eps[i]);
    }
    stats::weighted_slope(&lx, &ly, &w)
}

fn fit_window(n: usize) -> usize {
    n.div_ceil(2).max(MIN_FIT_POINTS).min(n)
}

fn assemble(
    alpha: f64,
    eta: f64,
    gamma_theory: f64,
    eta_forced: bool,
    geometry: Geometry,
    rows: Vec<FluxTerms>,
    rule: VerdictRule,
) -> FluxSweepReport {
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let window = fit_window(rows.len());
    let col = |f: fn(&FluxTerms) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let total = col(|r| r.pi_total);
    let slopes = Slopes {
        pi_total: fit(&eps, &eps, &total, window),
        pi_remainder: fit(&eps, &eps, &col(|r| r.pi_remainder), window),
        pi_rough: fit(&eps, &eps, &col(|r| r.pi_rough), window),
    };
    let max_total = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let terminal = total.last().map_or(0.0, |v| v.abs());
    let (slope_ok, terminal_ok) = if max_total <= rule.absolute_floor {
        (true, true)
    } else {
        (
            slopes.pi_total.is_some_and(|s| s > rule.min_slope),
            terminal <= rule.relative_floor * max_total,
        )
    };
    FluxSweepReport {
        alpha,
        eta,
        gamma_theory,
        eta_forced,
        geometry,
        rows,
        fit_window: window,
        fitted_slopes: slopes,
        verdict: Verdict {
            conserving: slope_ok && terminal_ok,
            slope_ok,
            terminal_ok,
            rule,
        },
        omega: None,
    }
}

fn rows_for(v: &GridField, eps: &[f64], opts: &FluxOptions) -> Result<Vec<FluxTerms>> {
    let base = MollifierKernel::for_grid(v.grid(), eps[0].min(1.0))?;
    eps.iter()
        .map(|&e| flux_terms_with(v, &base.with_epsilon(e)?, opts))
        .collect()
}

/// Flux terms over `eps_list` for one field, slopes fitted over the smallest
/// half of the ε values (at least four).
pub fn sweep(
    v: &GridField,
    alpha: f64,
    eps_list: &[f64],
    eta: f64,
    opts: &FluxOptions,
    rule: VerdictRule,
) -> Result<FluxSweepReport> {
    let eps = sorted_eps(eps_list)?;
    let (gamma_theory, forced) = resolve_eta(alpha, eta)?;
    let rows = rows_for(v, &eps, opts)?;
    Ok(assemble(alpha, eta, gamma_theory, forced, v.grid().geometry, rows, rule))
}

/// Time-series form: each term's absolute value is integrated over the
/// snapshot times by the trapezoid rule before fitting.
pub fn sweep_series(
    snapshots: &[(f64, GridField)],
    alpha: f64,
    eps_list: &[f64],
    eta: f64,
    opts: &FluxOptions,
    rule: VerdictRule,
) -> Result<FluxSweepReport> {
    if snapshots.len() < 2 {
        return Err(Error::invalid("a time-series sweep needs at least two snapshots"));
    }
    if snapshots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("snapshot times must be increasing"));
    }
    let eps = sorted_eps(eps_list)?;
    let (gamma_theory, forced) = resolve_eta(alpha, eta)?;
    let per_time: Vec<Vec<FluxTerms>> = snapshots
        .iter()
        .map(|(_, v)| rows_for(v, &eps, opts))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    let rows = (0..eps.len())
        .map(|i| {
            let integ = |f: fn(&FluxTerms) -> f64| {
                let vals: Vec<f64> = per_time.iter().map(|r| f(&r[i]).abs()).collect();
                stats::trapezoid(&times, &vals)
            };
            FluxTerms {
                epsilon: eps[i],
                pi_total: integ(|r| r.pi_total),
                pi_smooth: integ(|r| r.pi_smooth),
                pi_remainder: integ(|r| r.pi_remainder),
                pi_rough: integ(|r| r.pi_rough),
                residual: per_time.iter().map(|r| r[i].residual).fold(0.0, f64::max),
                nodes: per_time.iter().map(|r| r[i].nodes).max().unwrap_or(0),
            }
        })
        .collect();
    Ok(assemble(
        alpha,
        eta,
        gamma_theory,
        forced,
        snapshots[0].1.grid().geometry,
        rows,
        rule,
    ))
}

/// ω-refined sweep at `η = (1-α)/α`, so that `γ = 0` and the decay bound
/// is `ω(ε)^{1+η}`.
pub fn sweep_omega(
    v: &GridField,
    alpha: f64,
    omega: &Modulus,
    eps_list: &[f64],
    opts: &FluxOptions,
    rule: VerdictRule,
) -> Result<FluxSweepReport> {
    if !(alpha >= 1.0 / 3.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("sweep_omega needs alpha in [1/3, 1], got {alpha}")));
    }
    omega.validate()?;
    let eps = sorted_eps(eps_list)?;
    let eta = (1.0 - alpha) / alpha;
    let gamma_theory = gamma(alpha, eta);
    let rows = rows_for(v, &eps, opts)?;
    let mut report = assemble(alpha, eta, gamma_theory, false, v.grid().geometry, rows, rule);
    let scale: Vec<f64> = eps
        .iter()
        .map(|&e| omega.eval(e).powf(1.0 + eta) * e.powf(gamma_theory))
        .collect();
    let ratios: Vec<f64> = report
        .rows
        .iter()
        .zip(&scale)
        .map(|(r, s)| r.pi_total.abs() / s)
        .collect();
    let window = report.fit_window;
    let split = ratios.len() - window;
    let inside = ratios[split..].iter().cloned().fold(0.0, f64::max);
    let outside = ratios[..split].iter().cloned().fold(0.0, f64::max);
    let bounded = if split == 0 {
        ratios.iter().all(|r| r.is_finite())
    } else {
        inside <= BOUNDED_FACTOR * outside.max(rule.absolute_floor)
    };
    let total: Vec<f64> = report.rows.iter().map(|r| r.pi_total).collect();
    report.omega = Some(OmegaFit {
        modulus: *omega,
        slope: fit(&eps, &scale, &total, window),
        ratios,
        bounded_factor: BOUNDED_FACTOR,
        bounded,
    });
    Ok(report)
}

/// Exponent bookkeeping of the viscous criterion against the
/// `L^{2/(1+α)}_t L^{3/(1-α)}_x` class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alpha: f64,
    /// Time exponent `2/(1+α)`.
    pub time_exponent: f64,
    /// Space exponent `3/(1-α)` (Morrey proxy `W^{1,3/(1-α)}`).
    pub space_exponent: f64,
    /// `2/(2/(1+α)) + 3/(3/(1-α))`.
    pub lhs: f64,
    pub residual: f64,
}

/// Evaluates `2/(2/(1+α)) + 3/(3/(1-α))`, which equals 2.
pub fn scaling_check(alpha: f64) -> Result<ScalingReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let time_exponent = 2.0 / (1.0 + alpha);
    let space_exponent = 3.0 / (1.0 - alpha);
    let lhs = 2.0 / time_exponent + 3.0 / space_exponent;
    Ok(ScalingReport {
        alpha,
        time_exponent,
        space_exponent,
        lhs,
        residual: (lhs - 2.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn scaling_identity() {
        for a in [1.0 / 3.0, 0.5, 0.999_999] {
            let r = scaling_check(a).unwrap();
            assert!(r.residual <= 1e-15, "{r:?}");
        }
        assert!(scaling_check(1.0).is_err());
    }

    #[test]
    fn rejects_short_or_bad_lists() {
        let g = Grid::periodic([8, 8, 8]).unwrap();
        let v = GridField::zeros(g);
        let o = FluxOptions::default();
        assert!(sweep(&v, 0.5, &[0.1, 0.2, 0.3], 2.0, &o, VerdictRule::default()).is_err());
        assert!(sweep(&v, 0.5, &[0.1, 0.2, 0.3, 0.3], 2.0, &o, VerdictRule::default()).is_err());
        assert!(sweep(&v, 0.5, &[0.1, 0.2, 0.3, 0.4], 0.5, &o, VerdictRule::default()).is_err());
    }

    #[test]
    fn smooth_single_mode_is_conserving() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let v = GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let eps = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let r = sweep(&v, 1.0, &eps, 2.0, &FluxOptions::default(), VerdictRule::default()).unwrap();
        assert!(r.rows.iter().all(|t| t.pi_total.abs() <= 1e-10));
        assert!(r.fitted_slopes.pi_total.is_none());
        assert!(r.verdict.conserving);
        assert!(r.rows.windows(2).all(|w| w[0].epsilon > w[1].epsilon));
        assert_eq!(r.gamma_theory, 2.0);
    }

    #[test]
    fn forced_eta_below_threshold() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let v = GridField::zeros(g);
        let eps = [0.4, 0.2, 0.1, 0.05];
        let r = sweep(&v, 0.25, &eps, 2.0, &FluxOptions::default(), VerdictRule::default()).unwrap();
        assert!(r.eta_forced);
        assert_eq!(r.gamma_theory, gamma(0.25, 2.0));
    }

    #[test]
    fn omega_sweep_on_smooth_field_has_tiny_ratios() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let v = GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let eps = [0.4, 0.2, 0.1, 0.05];
        let r = sweep_omega(&v, 1.0 / 3.0, &Modulus::Log, &eps, &FluxOptions::default(), VerdictRule::default())
            .unwrap();
        let o = r.omega.clone().unwrap();
        assert!(o.ratios.iter().all(|x| *x < 1e-9));
        assert!(r.gamma_theory.abs() < 1e-15);
        assert!(r.to_csv().lines().next().unwrap().ends_with(",ratio"));
    }
}
