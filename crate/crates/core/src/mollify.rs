//! Friedrichs mollification on the torus and checks of the convolution
//! estimates `sup|u - u_ε| ≤ [u]_α ε^α` and `sup|∇u_ε| ≤ C [u]_α ε^{α-1}`.
//!
//! The kernel is the radial bump `ρ(x) = c·exp(-1/(1-|x|²))` on the unit
//! ball. Its Fourier transform has no closed form, so it is tabulated once
//! per lattice on a uniform radial grid and evaluated by eight-point
//! Lagrange interpolation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    forward_transform, inverse_scalar, inverse_transform, Geometry, Grid, GridField, SpectralField,
    Wavenumbers,
};
use crate::holder::Modulus;
use crate::quadrature::{gauss_for_weight, gauss_legendre_on};
use crate::stats;

/// Nodes of the radial transform table.
pub const TABLE_NODES: usize = 4096;
/// Gauss–Legendre nodes used for every radial integral of the bump.
const FINE_NODES: usize = 1024;

/// Dimension of the space the kernel lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelDim {
    /// `ρ` on `R³`, for periodic fields.
    Three,
    /// `ρ̃` on `R²`, for horizontal mollification of channel fields.
    Two,
}

impl KernelDim {
    pub fn as_usize(self) -> usize {
        match self {
            KernelDim::Three => 3,
            KernelDim::Two => 2,
        }
    }
}

/// Unnormalized bump `exp(-1/(1-r²))`.
#[inline]
pub fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

#[inline]
fn bump_derivative(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        bump(r) * (-2.0 * r / (s * s))
    }
}

#[derive(Debug)]
struct RadialTable {
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn eval(&self, xi: f64) -> Option<f64> {
        let xi = xi.abs();
        let t = xi / self.step;
        let n = self.values.len();
        if t > (n - 1) as f64 {
            return None;
        }
        let i = (t.floor() as usize).min(n - 2);
        // eight-point Lagrange stencil i-3..i+4, reflected at the even origin
        const W: isize = 8;
        let base = (i as isize - 3).min(n as isize - W);
        let x = t - base as f64;
        let mut sum = 0.0;
        for a in 0..W {
            let mut l = 1.0;
            for b in 0..W {
                if b != a {
                    l *= (x - b as f64) / (a - b) as f64;
                }
            }
            sum += l * self.values[(base + a).unsigned_abs()];
        }
        Some(sum)
    }
}

/// Radial integrals of the bump that depend only on the dimension.
#[derive(Debug)]
struct Profile {
    dim: KernelDim,
    /// Normalization `c` with `∫ ρ = 1`.
    norm: f64,
    /// `∫ |∇ρ|`.
    grad_l1: f64,
    /// Fine rule on `[0, 1]` for radial integrals.
    r_nodes: Vec<f64>,
    r_weights: Vec<f64>,
    /// Abel projection `P(s) = ∫ ρ(s, t) dt` on the fine nodes (2-D only).
    projection: Vec<f64>,
}

impl Profile {
    fn get(dim: KernelDim) -> Arc<Profile> {
        static CACHE: OnceLock<Mutex<HashMap<KernelDim, Arc<Profile>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        cache
            .lock()
            .expect("profile cache poisoned")
            .entry(dim)
            .or_insert_with(|| Arc::new(Profile::build(dim)))
            .clone()
    }

    fn build(dim: KernelDim) -> Profile {
        let (r_nodes, r_weights) = gauss_legendre_on(FINE_NODES, 0.0, 1.0);
        let sphere = |r: f64| match dim {
            KernelDim::Three => 4.0 * PI * r * r,
            KernelDim::Two => 2.0 * PI * r,
        };
        let mass: f64 = r_nodes
            .iter()
            .zip(&r_weights)
            .map(|(&r, &w)| w * bump(r) * sphere(r))
            .sum();
        let norm = 1.0 / mass;
        let grad_l1 = norm
            * r_nodes
                .iter()
                .zip(&r_weights)
                .map(|(&r, &w)| w * bump_derivative(r).abs() * sphere(r))
                .sum::<f64>();
        let projection = match dim {
            KernelDim::Three => Vec::new(),
            KernelDim::Two => {
                let (t, tw) = gauss_legendre_on(256, -1.0, 1.0);
                r_nodes
                    .iter()
                    .map(|&s| {
                        let half = (1.0 - s * s).max(0.0).sqrt();
                        norm * half
                            * t.iter()
                                .zip(&tw)
                                .map(|(&tt, &w)| w * bump((s * s + (half * tt).powi(2)).sqrt()))
                                .sum::<f64>()
                    })
                    .collect()
            }
        };
        Profile {
            dim,
            norm,
            grad_l1,
            r_nodes,
            r_weights,
            projection,
        }
    }

    /// `ρ̂(ξ)` at unit scale by direct quadrature.
    fn transform(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        match self.dim {
            KernelDim::Three => {
                self.norm
                    * self
                        .r_nodes
                        .iter()
                        .zip(&self.r_weights)
                        .map(|(&r, &w)| {
                            let z = xi * r;
                            let sinc = if z < 1e-8 { 1.0 - z * z / 6.0 } else { z.sin() / z };
                            w * bump(r) * 4.0 * PI * r * r * sinc
                        })
                        .sum::<f64>()
            }
            // even in s, so twice the half-line integral
            KernelDim::Two => {
                2.0 * self
                    .r_nodes
                    .iter()
                    .zip(&self.r_weights)
                    .zip(&self.projection)
                    .map(|((&s, &w), &p)| w * p * (xi * s).cos())
                    .sum::<f64>()
            }
        }
    }
}

fn table_for(dim: KernelDim, xi_max: f64) -> Result<Arc<RadialTable>> {
    type Cache = Mutex<HashMap<(KernelDim, u64), Arc<RadialTable>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&(dim, xi_max.to_bits())) {
        return Ok(t.clone());
    }
    let profile = Profile::get(dim);
    let step = xi_max / (TABLE_NODES - 1) as f64;
    let mut values: Vec<f64> = (0..TABLE_NODES).map(|i| profile.transform(i as f64 * step)).collect();
    if (values[0] - 1.0).abs() > 1e-10 {
        return Err(Error::Identity {
            what: "mollifier transform at the origin",
            residual: (values[0] - 1.0).abs(),
            tolerance: 1e-10,
        });
    }
    values[0] = 1.0;
    for v in values.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
    let table = Arc::new(RadialTable { step, values });
    cache
        .lock()
        .expect("table cache poisoned")
        .insert((dim, xi_max.to_bits()), table.clone());
    Ok(table)
}

/// Friedrichs mollifier `ρ_ε(x) = ε^{-d} ρ(x/ε)` with a tabulated transform.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    dim: KernelDim,
    epsilon: f64,
    xi_max: f64,
    profile: Arc<Profile>,
    table: Arc<RadialTable>,
}

impl MollifierKernel {
    /// Kernel whose transform table covers `ξ ∈ [0, xi_max]`.
    pub fn new(dim: KernelDim, epsilon: f64, xi_max: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::invalid("transform table range must be positive"));
        }
        Ok(MollifierKernel {
            dim,
            epsilon,
            xi_max,
            profile: Profile::get(dim),
            table: table_for(dim, xi_max)?,
        })
    }

    /// Kernel sized for `grid`: 3-D for periodic fields, 2-D (horizontal) for
    /// channel fields; table range `π` times the largest Nyquist wavenumber.
    pub fn for_grid(grid: &Grid, epsilon: f64) -> Result<Self> {
        let nyq = grid.nyquist_wavenumbers();
        let (dim, k) = match grid.geometry {
            Geometry::Periodic3 => (KernelDim::Three, nyq[0].max(nyq[1]).max(nyq[2])),
            Geometry::Channel => (KernelDim::Two, nyq[0].max(nyq[1])),
        };
        Self::new(dim, epsilon, PI * k.max(1.0))
    }

    /// Same kernel and table at another scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(MollifierKernel {
            epsilon,
            ..self.clone()
        })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn dim(&self) -> KernelDim {
        self.dim
    }

    pub fn table_range(&self) -> f64 {
        self.xi_max
    }

    /// `C = ∫|∇ρ|` (Euclidean norm of the gradient), at unit scale.
    pub fn grad_l1(&self) -> f64 {
        self.profile.grad_l1
    }

    /// Normalized profile `ρ(r)` at unit scale.
    pub fn profile(&self, r: f64) -> f64 {
        self.profile.norm * bump(r)
    }

    /// `ρ_ε(y)` for `|y| = r`.
    pub fn scaled(&self, r: f64) -> f64 {
        self.profile(r / self.epsilon) / self.epsilon.powi(self.dim.as_usize() as i32)
    }

    /// `ρ̂(ξ)` at unit scale from the table; direct quadrature past its end.
    pub fn transform(&self, xi: f64) -> f64 {
        self.table
            .eval(xi)
            .unwrap_or_else(|| self.profile.transform(xi).clamp(-1.0, 1.0))
    }

    /// `ρ̂(ξ)` at unit scale by direct radial quadrature (no table).
    pub fn transform_direct(&self, xi: f64) -> f64 {
        self.profile.transform(xi)
    }

    /// Fourier multiplier `ρ̂(ε|k|)`.
    #[inline]
    pub fn multiplier(&self, k_norm: f64) -> f64 {
        self.transform(self.epsilon * k_norm)
    }

    /// Multiplier on every mode of a periodic lattice.
    pub fn spectral_multiplier(&self, wn: &Wavenumbers) -> Vec<f64> {
        let n: usize = wn.dims.iter().product();
        let m: Vec<f64> = (0..n).map(|idx| self.multiplier(wn.norm_at(idx))).collect();
        debug_assert!(m.iter().all(|v| v.abs() <= 1.0));
        m
    }

    /// Product Gauss rule for `∫_{B(0,ε)} ρ_ε(y) g(y) dy` in 3-D: radial Gauss
    /// nodes for the weight `ρ(r) r²`, Gauss–Legendre in `cos θ`, and the
    /// trapezoid rule in `φ`. Weights sum to one.
    pub fn ball_rule(&self, rule: BallRule) -> Result<Vec<([f64; 3], f64)>> {
        if self.dim != KernelDim::Three {
            return Err(Error::invalid("ball_rule needs a 3-D kernel"));
        }
        rule.validate()?;
        let norm = self.profile.norm;
        let (r, wr) = gauss_for_weight(rule.radial, 0.0, 1.0, FINE_NODES, |r| norm * bump(r) * r * r)?;
        let (ct, wt) = gauss_legendre_on(rule.polar, -1.0, 1.0);
        let dphi = 2.0 * PI / rule.azimuthal as f64;
        let mut nodes = Vec::with_capacity(rule.count());
        for (ri, wri) in r.iter().zip(&wr) {
            for (c, wc) in ct.iter().zip(&wt) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for p in 0..rule.azimuthal {
                    let phi = (p as f64 + 0.5) * dphi;
                    let rr = self.epsilon * ri;
                    nodes.push(([rr * s * phi.cos(), rr * s * phi.sin(), rr * c], wri * wc * dphi));
                }
            }
        }
        Ok(nodes)
    }

    /// Polar product rule for `∫_{B(0,ε)⊂R²} ρ̃_ε(y) g(y) dy`. Weights sum to one.
    pub fn disk_rule(&self, radial: usize, azimuthal: usize) -> Result<Vec<([f64; 2], f64)>> {
        if self.dim != KernelDim::Two {
            return Err(Error::invalid("disk_rule needs a 2-D kernel"));
        }
        if radial < 3 || azimuthal < 3 {
            return Err(Error::invalid("disk rule needs at least 3 nodes per direction"));
        }
        let norm = self.profile.norm;
        let (r, wr) = gauss_for_weight(radial, 0.0, 1.0, FINE_NODES, |r| norm * bump(r) * r)?;
        let dphi = 2.0 * PI / azimuthal as f64;
        let mut nodes = Vec::with_capacity(radial * azimuthal);
        for (ri, wri) in r.iter().zip(&wr) {
            for p in 0..azimuthal {
                let phi = (p as f64 + 0.5) * dphi;
                let rr = self.epsilon * ri;
                nodes.push(([rr * phi.cos(), rr * phi.sin()], wri * dphi));
            }
        }
        Ok(nodes)
    }
}

/// Node counts of the ball quadrature `radial × polar × azimuthal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallRule {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
}

impl BallRule {
    pub fn cube(n: usize) -> Self {
        BallRule {
            radial: n,
            polar: n,
            azimuthal: n,
        }
    }

    /// Rule resolving integrands `e^{i q·y}` with `|q| ε ≤ reach`: the
    /// angular degree `D` is the smallest with `(reach/2)^D / D! < 1e-17`.
    pub fn resolving(reach: f64) -> Self {
        let half = (reach / 2.0).max(0.0);
        let mut degree = 14usize;
        loop {
            let log_term = degree as f64 * half.max(1e-300).ln() - ln_factorial(degree);
            if log_term < -39.0 || degree >= 400 {
                break;
            }
            degree += 1;
        }
        BallRule {
            radial: degree.div_ceil(2),
            polar: degree.div_ceil(2),
            azimuthal: degree + degree % 2,
        }
    }

    pub fn count(&self) -> usize {
        self.radial * self.polar * self.azimuthal
    }

    pub fn validate(&self) -> Result<()> {
        if self.radial < 3 || self.polar < 3 || self.azimuthal < 3 {
            return Err(Error::invalid(format!(
                "ball quadrature needs at least 3 nodes per axis, got {self:?}"
            )));
        }
        Ok(())
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

impl Default for BallRule {
    fn default() -> Self {
        BallRule::cube(7)
    }
}

pub(crate) fn check_scale(grid: &Grid, kernel: &MollifierKernel) -> Result<()> {
    let half = grid.lengths.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    if kernel.epsilon() >= half {
        return Err(Error::invalid(format!(
            "epsilon {} must be below the smallest half-period {half}",
            kernel.epsilon()
        )));
    }
    Ok(())
}

/// `ρ_ε * u` on the torus, as the multiplier `ρ̂(ε|k|)`.
pub fn mollify(u: &GridField, kernel: &MollifierKernel) -> Result<GridField> {
    let s = forward_transform(u)?;
    Ok(inverse_transform(&mollify_spectral(&s, kernel)?))
}

/// Spectral form of [`mollify`]; keeps the divergence-free flag.
pub fn mollify_spectral(s: &SpectralField, kernel: &MollifierKernel) -> Result<SpectralField> {
    if kernel.dim() != KernelDim::Three {
        return Err(Error::invalid("periodic mollification needs a 3-D kernel"));
    }
    check_scale(s.grid(), kernel)?;
    let m = kernel.spectral_multiplier(&s.wavenumbers());
    Ok(s.apply_multiplier(&m))
}

/// `max_x |∇u(x)|` (Frobenius norm of the velocity gradient).
pub fn sup_gradient(s: &SpectralField) -> f64 {
    let g = s.gradient();
    let dims = s.grid().dims;
    let phys: Vec<Vec<f64>> = g.iter().flatten().map(|c| inverse_scalar(c, dims)).collect();
    (0..s.grid().len())
        .map(|idx| phys.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// One row of a convolution-estimate sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvRow {
    pub eps: f64,
    pub sup_diff: f64,
    pub sup_grad: f64,
    /// `sup|u - u_ε| / ([u] ω(ε) ε^α)`.
    pub ratio1: f64,
    /// `sup|∇u_ε| / ([u] ω(ε) ε^{α-1})`.
    pub ratio2: f64,
    /// Least-squares slope of `log sup|∇u_ε|` against `log ε` over the rows so far.
    pub slope_so_far: Option<f64>,
}

/// Sweep output plus the constant the second ratio is compared against.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvTable {
    pub alpha: f64,
    pub seminorm: f64,
    pub grad_constant: f64,
    pub modulus: Modulus,
    pub rows: Vec<ConvRow>,
}

impl ConvTable {
    pub fn max_ratio1(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio1).fold(0.0, f64::max)
    }

    pub fn max_ratio2(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio2).fold(0.0, f64::max)
    }

    /// Slope over all rows.
    pub fn grad_slope(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.slope_so_far)
    }

    /// CSV with header `eps,sup_diff,sup_grad,ratio1,ratio2,slope_so_far`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,sup_diff,sup_grad,ratio1,ratio2,slope_so_far\n");
        for r in &self.rows {
            let slope = r.slope_so_far.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.eps, r.sup_diff, r.sup_grad, r.ratio1, r.ratio2, slope
            ));
        }
        s
    }
}

/// Evaluates both convolution estimates along `eps_list` for a field with
/// Hölder seminorm `seminorm` at exponent `alpha`.
pub fn check_conv_estimates(
    u: &GridField,
    alpha: f64,
    seminorm: f64,
    eps_list: &[f64],
) -> Result<ConvTable> {
    check_conv_estimates_omega(u, alpha, &Modulus::Constant, seminorm, eps_list)
}

/// As [`check_conv_estimates`] with the ω-weighted seminorm `[u]_{ω,α}`;
/// both divisors gain the factor `ω(ε)`.
pub fn check_conv_estimates_omega(
    u: &GridField,
    alpha: f64,
    omega: &Modulus,
    seminorm: f64,
    eps_list: &[f64],
) -> Result<ConvTable> {
    if eps_list.is_empty() {
        return Err(Error::invalid("eps_list is empty"));
    }
    if !(seminorm >= 0.0 && seminorm.is_finite()) {
        return Err(Error::invalid(format!("seminorm must be finite and >= 0, got {seminorm}")));
    }
    let spec = forward_transform(u)?;
    let base = MollifierKernel::for_grid(u.grid(), eps_list[0])?;
    let mut rows: Vec<ConvRow> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let kernel = base.with_epsilon(eps)?;
        let smooth = mollify_spectral(&spec, &kernel)?;
        let sup_diff = inverse_transform(&smooth).max_norm_diff(u);
        let sup_grad = sup_gradient(&smooth);
        let scale = seminorm * omega.eval(eps);
        let ratio = |num: f64, pow: f64| {
            if num == 0.0 {
                0.0
            } else {
                num / (scale * eps.powf(pow))
            }
        };
        rows.push(ConvRow {
            eps,
            sup_diff,
            sup_grad,
            ratio1: ratio(sup_diff, alpha),
            ratio2: ratio(sup_grad, alpha - 1.0),
            slope_so_far: None,
        });
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.sup_grad > 0.0)
            .map(|r| (r.eps.ln(), r.sup_grad.ln()))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        rows.last_mut().unwrap().slope_so_far = stats::slope(&x, &y);
    }
    Ok(ConvTable {
        alpha,
        seminorm,
        grad_constant: base.grad_l1(),
        modulus: *omega,
        rows,
    })
}

impl GridField {
    /// `max_x |self(x) - other(x)|` (Euclidean norm per node).
    pub fn max_norm_diff(&self, other: &GridField) -> f64 {
        (0..self.grid().len())
            .map(|i| {
                let a = self.at(i);
                let b = other.at(i);
                crate::fields::norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            })
            .fold(0.0, f64::max)
    }
}
