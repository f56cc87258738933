//! Hölder seminorms, ω-weighted seminorms, second-order structure-function
//! exponents and the time-integrability functionals `‖f_α‖_{L^β(0,T)}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{norm3, Geometry, GridField};
use crate::stats;

/// Sup-increments may dip by this relative amount between consecutive shells
/// before the profile is reported as non-monotone (lattice granularity).
pub const MONOTONE_TOLERANCE: f64 = 0.05;
/// Slope of `log(ratio)` against `log r` below which the seminorm is flagged
/// as diverging (ratios growing as `r → 0`).
pub const DIVERGENCE_SLOPE: f64 = -0.1;
/// `ζ₂/2` below this value classifies a field as rough.
pub const ROUGH_THRESHOLD: f64 = 0.1;
/// Default `δ` in the exponent `1/α + δ`.
pub const DEFAULT_DELTA: f64 = 0.1;

/// Modulus of continuity `ω`: non-decreasing with `ω(0⁺) = 0`, except for the
/// degenerate constant member which recovers the plain Hölder seminorm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Modulus {
    #[default]
    Constant,
    /// `ω(s) = s^θ`.
    Power { theta: f64 },
    /// `ω(s) = 1 / log(e + 1/s)`.
    Log,
}

impl Modulus {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Modulus::Constant => 1.0,
            Modulus::Power { theta } => s.powf(theta),
            Modulus::Log => 1.0 / (std::f64::consts::E + 1.0 / s).ln(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Modulus::Power { theta } = *self {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::invalid(format!("power modulus needs theta > 0, got {theta}")));
            }
        }
        Ok(())
    }

    /// Parses `constant`, `log`, or `power:θ`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let m = match s {
            "constant" | "one" => Modulus::Constant,
            "log" => Modulus::Log,
            _ => {
                let theta = s
                    .strip_prefix("power:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown modulus `{s}`")))?;
                Modulus::Power { theta }
            }
        };
        m.validate()?;
        Ok(m)
    }
}

/// One dyadic shell `r_lo < |y| ≤ r_hi` of the sup-increment profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Number of sampled displacements in the shell.
    pub count: usize,
    /// `max_{y in shell} sup_x |u(x+y) - u(x)|`.
    pub sup_increment: f64,
    /// `max_{y in shell} sup_x |u(x+y) - u(x)| / (ω(|y|) |y|^α)`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub modulus: Modulus,
    pub max_radius: f64,
    pub seminorm: f64,
    /// Shells ordered by increasing radius; empty shells are omitted.
    pub shell_data: Vec<Shell>,
    /// Least-squares slope of `log max_ratio` against `log r_hi`.
    pub ratio_slope: Option<f64>,
    pub divergence_threshold: f64,
    /// Ratios grow as `r → 0` faster than `divergence_threshold` allows.
    pub diverging: bool,
    /// Sup-increments are non-decreasing in `r` within `MONOTONE_TOLERANCE`.
    pub monotone: bool,
    pub zeta2: Option<f64>,
}

impl HolderEstimate {
    /// CSV with header `r_lo,r_hi,count,sup_increment,max_ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r_lo,r_hi,count,sup_increment,max_ratio\n");
        for sh in &self.shell_data {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                sh.r_lo, sh.r_hi, sh.count, sh.sup_increment, sh.max_ratio
            ));
        }
        s
    }
}

/// `max_x |u(x + m∘h) - u(x)|` for an integer lattice displacement `m`.
/// On channel grids the vertical component of `m` must be zero.
pub(crate) fn sup_lattice_increment(u: &GridField, m: [i64; 3]) -> f64 {
    let [n0, n1, n2] = u.dims();
    let wrap = |i: usize, s: i64, n: usize| (i as i64 + s).rem_euclid(n as i64) as usize;
    let plane = n0 * n1;
    let c = u.components();
    (0..n2)
        .into_par_iter()
        .map(|k| {
            let kk = wrap(k, m[2], n2);
            let mut best = 0.0f64;
            for j in 0..n1 {
                let jj = wrap(j, m[1], n1);
                for i in 0..n0 {
                    let ii = wrap(i, m[0], n0);
                    let a = i + n0 * j + plane * k;
                    let b = ii + n0 * jj + plane * kk;
                    let d = norm3([c[0][b] - c[0][a], c[1][b] - c[1][a], c[2][b] - c[2][a]]);
                    best = best.max(d);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Canonical representative of `±m` (increments at `m` and `-m` share a sup).
fn canonical(m: [i64; 3]) -> bool {
    m[2] > 0 || (m[2] == 0 && (m[1] > 0 || (m[1] == 0 && m[0] > 0)))
}

/// Sampled displacements: every lattice vector with `|m|_∞ ≤ 3`, plus
/// multiples of the 13 lattice directions `{-1,0,1}³/±` out to `max_radius`.
/// `axes` selects the active axes (horizontal only on channels).
pub(crate) fn displacements(spacing: [f64; 3], max_radius: f64, axes: [bool; 3]) -> Vec<[i64; 3]> {
    let len = |m: [i64; 3]| {
        norm3([
            m[0] as f64 * spacing[0],
            m[1] as f64 * spacing[1],
            m[2] as f64 * spacing[2],
        ])
    };
    let span = |a: usize, r: i64| if axes[a] { r } else { 0 };
    let mut out = Vec::new();
    for a in -span(2, 3)..=span(2, 3) {
        for b in -span(1, 3)..=span(1, 3) {
            for c in -span(0, 3)..=span(0, 3) {
                let m = [c, b, a];
                if canonical(m) && len(m) <= max_radius * (1.0 + 1e-12) {
                    out.push(m);
                }
            }
        }
    }
    for a in -1i64..=1 {
        for b in -1i64..=1 {
            for c in -1i64..=1 {
                let d = [c, b, a];
                if !canonical(d) || (0..3).any(|ax| !axes[ax] && d[ax] != 0) {
                    continue;
                }
                let mut s = 4;
                loop {
                    let m = [d[0] * s, d[1] * s, d[2] * s];
                    if len(m) > max_radius * (1.0 + 1e-12) {
                        break;
                    }
                    if m.iter().any(|v| v.abs() > 3) {
                        out.push(m);
                    }
                    s += 1;
                }
            }
        }
    }
    out
}

/// Shell profile over explicit lattice displacements.
pub(crate) fn estimate_over(
    u: &GridField,
    disp: &[[i64; 3]],
    alpha: f64,
    omega: &Modulus,
    max_radius: f64,
    dyadic_top: f64,
) -> HolderEstimate {
    let h = u.grid().spacing();
    let mut samples: Vec<(f64, f64)> = disp
        .iter()
        .map(|&m| {
            let r = norm3([m[0] as f64 * h[0], m[1] as f64 * h[1], m[2] as f64 * h[2]]);
            (r, sup_lattice_increment(u, m))
        })
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ratio = |r: f64, inc: f64| if inc == 0.0 { 0.0 } else { inc / (omega.eval(r) * r.powf(alpha)) };

    let mut shells: Vec<Shell> = Vec::new();
    let mut j = 0;
    loop {
        let r_hi = dyadic_top / 2f64.powi(j);
        let r_lo = r_hi / 2.0;
        let inside: Vec<&(f64, f64)> = samples
            .iter()
            .filter(|(r, _)| *r > r_lo * (1.0 + 1e-12) && *r <= r_hi * (1.0 + 1e-12))
            .collect();
        if !inside.is_empty() {
            shells.push(Shell {
                r_lo,
                r_hi,
                count: inside.len(),
                sup_increment: inside.iter().map(|s| s.1).fold(0.0, f64::max),
                max_ratio: inside.iter().map(|s| ratio(s.0, s.1)).fold(0.0, f64::max),
            });
        }
        if samples.first().map_or(true, |s| s.0 > r_lo * (1.0 + 1e-12)) {
            break;
        }
        j += 1;
    }
    shells.reverse();

    let seminorm = samples.iter().map(|s| ratio(s.0, s.1)).fold(0.0, f64::max);
    let monotone = shells
        .windows(2)
        .all(|w| w[1].sup_increment >= w[0].sup_increment * (1.0 - MONOTONE_TOLERANCE));
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .filter(|s| s.max_ratio > 0.0)
        .map(|s| (s.r_hi.ln(), s.max_ratio.ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let ratio_slope = stats::slope(&x, &y);
    HolderEstimate {
        alpha,
        modulus: *omega,
        max_radius,
        seminorm,
        diverging: ratio_slope.is_some_and(|s| s < DIVERGENCE_SLOPE),
        ratio_slope,
        divergence_threshold: DIVERGENCE_SLOPE,
        monotone,
        shell_data: shells,
        zeta2: None,
    }
}

fn check_radius(u: &GridField, max_radius: f64) -> Result<()> {
    let quarter = u.grid().lengths.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0;
    if !(max_radius > 0.0 && max_radius <= quarter * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "max_radius must lie in (0, {quarter}] (quarter period), got {max_radius}"
        )));
    }
    Ok(())
}

/// `[u]_α ≈ max_y sup_x |u(x+y) - u(x)| / |y|^α` over sampled lattice
/// displacements with `|y| ≤ max_radius`.
pub fn estimate_seminorm(u: &GridField, alpha: f64, max_radius: f64) -> Result<HolderEstimate> {
    estimate_seminorm_omega(u, alpha, &Modulus::Constant, max_radius)
}

/// `[u]_{ω,α}` with divisor `ω(|y|) |y|^α`.
pub fn estimate_seminorm_omega(
    u: &GridField,
    alpha: f64,
    omega: &Modulus,
    max_radius: f64,
) -> Result<HolderEstimate> {
    u.grid().require_periodic("estimate_seminorm")?;
    check_radius(u, max_radius)?;
    omega.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let disp = displacements(u.grid().spacing(), max_radius, [true; 3]);
    let top = u.grid().lengths.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0;
    let mut est = estimate_over(u, &disp, alpha, omega, max_radius, top);
    est.zeta2 = estimate_zeta2(u).ok().map(|z| z.zeta2);
    Ok(est)
}

/// Quarter of the smallest period.
pub fn quarter_period(u: &GridField) -> f64 {
    u.grid().lengths.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0
}

/// Fitted structure-function exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Zeta2 {
    pub zeta2: f64,
    /// `ζ₂ / 2`, the Hölder proxy.
    pub holder_proxy: f64,
    pub rough: bool,
    pub rough_threshold: f64,
    /// `(r, S₂(r))` pairs used in the fit.
    pub shells: Vec<(f64, f64)>,
}

/// `S₂(r)` averaged over `x` and over the active axis directions, at lattice
/// lag `lag` along each active axis.
pub(crate) fn structure_function(u: &GridField, lag: i64, axes: [bool; 3], planes: &[usize]) -> (f64, f64) {
    let dims = u.dims();
    let h = u.grid().spacing();
    let c = u.components();
    let plane = dims[0] * dims[1];
    let mut total = 0.0;
    let mut r_sum = 0.0;
    let mut n_axes = 0;
    for a in 0..3 {
        if !axes[a] {
            continue;
        }
        n_axes += 1;
        r_sum += lag as f64 * h[a];
        let mut m = [0i64; 3];
        m[a] = lag;
        let per_plane: Vec<f64> = planes
            .par_iter()
            .map(|&k| {
                let kk = (k as i64 + m[2]).rem_euclid(dims[2] as i64) as usize;
                let mut s = 0.0;
                for j in 0..dims[1] {
                    let jj = (j as i64 + m[1]).rem_euclid(dims[1] as i64) as usize;
                    for i in 0..dims[0] {
                        let ii = (i as i64 + m[0]).rem_euclid(dims[0] as i64) as usize;
                        let p = i + dims[0] * j + plane * k;
                        let q = ii + dims[0] * jj + plane * kk;
                        for comp in c.iter() {
                            let d = comp[q] - comp[p];
                            s += d * d;
                        }
                    }
                }
                s
            })
            .collect();
        total += per_plane.iter().sum::<f64>() / (planes.len() * plane) as f64;
    }
    (r_sum / n_axes as f64, total / n_axes as f64)
}

/// Fits `log S₂` against `log r` at lattice lags `1, 2, 4, …` up to `max_lag`.
pub(crate) fn fit_zeta2(u: &GridField, max_lag: usize, axes: [bool; 3], planes: &[usize]) -> Result<Zeta2> {
    // half-octave lags up to max_lag; one- and two-step lags sit in the
    // band-cutoff crossover and bias the slope upwards
    let mut lags: Vec<i64> = (0..4)
        .map(|j| (max_lag as f64 * 0.5f64.powf(j as f64 / 2.0)).round() as i64)
        .filter(|&l| l >= 1)
        .collect();
    lags.dedup();
    if lags.len() < 4 {
        return Err(Error::invalid(format!(
            "structure-function fit needs 4 distinct lags up to {max_lag} (lattice too coarse)"
        )));
    }
    lags.reverse();
    let shells: Vec<(f64, f64)> = lags.iter().map(|&l| structure_function(u, l, axes, planes)).collect();
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .filter(|s| s.1 > 0.0)
        .map(|s| (s.0.ln(), s.1.ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let zeta2 = stats::slope(&x, &y).unwrap_or(0.0);
    Ok(Zeta2 {
        zeta2,
        holder_proxy: zeta2 / 2.0,
        rough: zeta2 / 2.0 < ROUGH_THRESHOLD,
        rough_threshold: ROUGH_THRESHOLD,
        shells,
    })
}

/// Second-order structure-function exponent along the lattice axes over four
/// half-octave lags ending at `N h/8` (3, 4, 6 and 8 steps at `N = 64`).
pub fn estimate_zeta2(u: &GridField) -> Result<Zeta2> {
    if u.grid().geometry != Geometry::Periodic3 {
        return Err(Error::invalid("estimate_zeta2 needs a periodic field"));
    }
    let n = *u.dims().iter().min().unwrap();
    let planes: Vec<usize> = (0..u.dims()[2]).collect();
    fit_zeta2(u, n / 8, [true; 3], &planes)
}

/// Samples of `f_α(t) = [v(t)]_α` and the exponent `β` to test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeSeminormSeries {
    pub times: Vec<f64>,
    pub f_alpha: Vec<f64>,
    pub beta: f64,
}

impl TimeSeminormSeries {
    pub fn new(times: Vec<f64>, f_alpha: Vec<f64>, beta: f64) -> Result<Self> {
        if times.is_empty() || times.len() != f_alpha.len() {
            return Err(Error::invalid("time series is empty or has mismatched lengths"));
        }
        if f_alpha.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("seminorm samples must be finite and non-negative"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        Ok(TimeSeminormSeries { times, f_alpha, beta })
    }
}

/// `(∫ f_α^β dt)^{1/β}` by the trapezoid rule.
pub fn time_integrability(series: &TimeSeminormSeries) -> Result<f64> {
    lebesgue_norm(series, series.beta)
}

fn lebesgue_norm(series: &TimeSeminormSeries, beta: f64) -> Result<f64> {
    if series.times.is_empty() {
        return Err(Error::invalid("empty time series"));
    }
    if !(beta >= 1.0) {
        return Err(Error::invalid(format!("beta must be >= 1, got {beta}")));
    }
    let powered: Vec<f64> = series.f_alpha.iter().map(|f| f.powf(beta)).collect();
    Ok(stats::trapezoid(&series.times, &powered).powf(1.0 / beta))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegrabilityEntry {
    pub label: String,
    pub beta: f64,
    pub value: f64,
}

/// The three exponents of the criteria: `1/α + δ` (inviscid), `1/α`, and the
/// viscous threshold `2/(1+α)`. Entries with `β < 1` are skipped.
pub fn integrability_report(
    series: &TimeSeminormSeries,
    alpha: f64,
    delta: f64,
) -> Result<Vec<IntegrabilityEntry>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut out = Vec::new();
    for (label, beta) in [
        ("inviscid", 1.0 / alpha + delta),
        ("inviscid_endpoint", 1.0 / alpha),
        ("viscous", viscous_exponent(alpha)),
    ] {
        if beta >= 1.0 {
            out.push(IntegrabilityEntry {
                label: label.to_string(),
                beta,
                value: lebesgue_norm(series, beta)?,
            });
        }
    }
    Ok(out)
}

/// `2 / (1 + α)`.
pub fn viscous_exponent(alpha: f64) -> f64 {
    2.0 / (1.0 + alpha)
}

/// The interval of splitting parameters `η` with `αη + α - 1 > 0` and `η ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaInterval {
    pub alpha: f64,
    /// Open lower end `(1-α)/α`.
    pub lower: f64,
    /// Closed upper end `2`.
    pub upper: f64,
    pub empty: bool,
}

impl EtaInterval {
    pub fn contains(&self, eta: f64) -> bool {
        !self.empty && eta > self.lower && eta <= self.upper
    }

    pub fn gamma(&self, eta: f64) -> f64 {
        gamma(self.alpha, eta)
    }
}

/// `γ(η) = αη + α - 1`.
pub fn gamma(alpha: f64, eta: f64) -> f64 {
    alpha * eta + alpha - 1.0
}

/// `((1-α)/α, 2]`, empty exactly when `α ≤ 1/3`.
pub fn admissible_eta(alpha: f64) -> Result<EtaInterval> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(EtaInterval {
        alpha,
        lower: (1.0 - alpha) / alpha,
        upper: 2.0,
        empty: alpha <= 1.0 / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, SynthesisSpec};

    #[test]
    fn constant_field_has_zero_seminorm() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let u = GridField::from_fn(g, |_| [1.0, 2.0, 3.0]);
        let e = estimate_seminorm(&u, 0.5, quarter_period(&u)).unwrap();
        assert_eq!(e.seminorm, 0.0);
    }

    #[test]
    fn lipschitz_constant_of_sine() {
        let g = Grid::periodic([64, 64, 64]).unwrap();
        let u = GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let e = estimate_seminorm(&u, 1.0, quarter_period(&u)).unwrap();
        assert!((e.seminorm - 1.0).abs() < 2e-2, "{}", e.seminorm);
        assert!(e.monotone);
        let z = estimate_zeta2(&u).unwrap();
        assert!((z.zeta2 - 2.0).abs() < 0.1, "{}", z.zeta2);
    }

    #[test]
    fn seminorm_scales_linearly_and_is_shift_invariant() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let u = crate::fields::random_band_limited(2, g, 4.0).unwrap();
        let r = quarter_period(&u);
        let a = estimate_seminorm(&u, 0.5, r).unwrap().seminorm;
        let b = estimate_seminorm(&u.scale(-2.5), 0.5, r).unwrap().seminorm;
        let c = estimate_seminorm(&u.roll([3, 1, -4]), 0.5, r).unwrap().seminorm;
        assert!((b - 2.5 * a).abs() <= 1e-12 * b);
        assert!((c - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn rejects_large_radius() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let u = GridField::zeros(g);
        assert!(estimate_seminorm(&u, 0.5, 2.0).is_err());
        assert!(estimate_zeta2(&u).is_err());
    }

    #[test]
    fn displacements_are_canonical_and_bounded() {
        let d = displacements([0.1; 3], 0.55, [true; 3]);
        assert!(d.iter().all(|m| canonical(*m)));
        assert!(d.iter().all(|m| norm3([m[0] as f64, m[1] as f64, m[2] as f64]) * 0.1 <= 0.55 + 1e-12));
        assert!(d.contains(&[5, 0, 0]) && d.contains(&[-1, 1, 1]));
        let h = displacements([0.1; 3], 0.55, [true, true, false]);
        assert!(h.iter().all(|m| m[2] == 0));
    }

    #[test]
    fn white_noise_is_rough() {
        let g = Grid::periodic([64, 64, 64]).unwrap();
        let u = crate::fields::synthesize_white_noise(4, g).unwrap();
        let z = estimate_zeta2(&u).unwrap();
        assert!(z.rough, "zeta2 {}", z.zeta2);
    }

    #[test]
    fn synthesized_field_zeta_tracks_target() {
        let g = Grid::periodic([64, 64, 64]).unwrap();
        let spec = SynthesisSpec::full_band(0.4, 11, &g);
        let u = crate::fields::synthesize_holder_field(&spec, g).unwrap();
        let z = estimate_zeta2(&u).unwrap();
        assert!((0.3..=0.5).contains(&z.holder_proxy), "{}", z.holder_proxy);
    }

    #[test]
    fn divergence_flag_separates_exponents() {
        let g = Grid::periodic([64, 64, 64]).unwrap();
        let spec = SynthesisSpec::full_band(0.5, 3, &g);
        let u = crate::fields::synthesize_holder_field(&spec, g).unwrap();
        let r = quarter_period(&u);
        let at = estimate_seminorm(&u, 0.5, r).unwrap();
        let above = estimate_seminorm(&u, 0.8, r).unwrap();
        assert!(at.seminorm.is_finite() && !at.diverging, "{:?}", at.ratio_slope);
        assert!(above.diverging, "{:?}", above.ratio_slope);
    }

    #[test]
    fn time_integrability_examples() {
        let s = TimeSeminormSeries::new(vec![0.0, 0.5, 1.0], vec![1.0; 3], 2.0).unwrap();
        assert!((time_integrability(&s).unwrap() - 1.0).abs() < 1e-15);
        let n = 4001;
        let t: Vec<f64> = (0..n).map(|i| 0.1 + 0.9 * i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = t.iter().map(|t| t.powf(-0.25)).collect();
        let s = TimeSeminormSeries::new(t, f, 2.0).unwrap();
        let exact = (2.0 * (1.0 - 0.1f64.sqrt())).sqrt();
        assert!((time_integrability(&s).unwrap() - exact).abs() < 1e-3);
        let rep = integrability_report(&s, 1.0 / 3.0, DEFAULT_DELTA).unwrap();
        let viscous = rep.iter().find(|e| e.label == "viscous").unwrap();
        assert!((viscous.beta - 1.5).abs() < 1e-15);
        assert!(TimeSeminormSeries::new(vec![], vec![], 2.0).is_err());
    }

    #[test]
    fn eta_interval_examples() {
        let half = admissible_eta(0.5).unwrap();
        assert!(!half.empty && half.lower == 1.0 && half.upper == 2.0);
        assert_eq!(half.gamma(2.0), 0.5);
        assert!(admissible_eta(1.0 / 3.0).unwrap().empty);
        assert!(admissible_eta(0.25).unwrap().empty);
        assert!(admissible_eta(0.0).is_err());
    }

    #[test]
    fn modulus_families() {
        assert_eq!(Modulus::Constant.eval(0.3), 1.0);
        assert!((Modulus::Power { theta: 0.5 }.eval(0.25) - 0.5).abs() < 1e-15);
        assert!(Modulus::Log.eval(1e-3) < Modulus::Log.eval(1e-1));
        assert_eq!(Modulus::parse("power:0.3").unwrap(), Modulus::Power { theta: 0.3 });
        assert!(Modulus::parse("power:-1").is_err());
        assert!(Modulus::parse("bogus").is_err());
    }
}
