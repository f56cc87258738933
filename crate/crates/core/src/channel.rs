//! Wall-bounded channel: periodic in `x_h = (x1, x2)`, walls at `x3 = 0` and
//! `x3 = L3`.
//!
//! Horizontal derivatives are spectral per plane; vertical derivatives use
//! fourth-order finite differences on the uniform wall-inclusive nodes, with
//! one-sided five-point closures at and next to the walls (exact for
//! polynomials of degree four). Mollification acts on `x_h` only, so walls
//! stay at zero and the discrete divergence is preserved.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::{padded_dims, IDENTITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::fields::{random_phase_coefficients, Geometry, Grid, GridField, SynthesisSpec};
use crate::holder::{displacements, estimate_over, fit_zeta2, HolderEstimate, Modulus, Zeta2};
use crate::mollify::{BallRule, KernelDim, MollifierKernel};
use crate::stats;

/// Tolerance on the discrete divergence of channel fields.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;
/// Slack on `sup|v - ṽ_ε| ≤ [v]_{ω,hor} ω(ε)`.
pub const LEMMA_SLACK: f64 = 0.1;

fn require_channel(grid: &Grid, what: &str) -> Result<()> {
    if grid.geometry != Geometry::Channel {
        return Err(Error::invalid(format!("{what} requires a channel field")));
    }
    Ok(())
}

/// Envelope `E(x3) = (x3 (L3 - x3))² / (L3/2)⁴` and its derivative.
pub fn envelope(x3: f64, l3: f64) -> (f64, f64) {
    let q = (l3 / 2.0).powi(4);
    let p = x3 * (l3 - x3);
    (p * p / q, 2.0 * p * (l3 - 2.0 * x3) / q)
}

/// Fourth-order `d/dx3` of one vertical column with stride `stride`.
fn d3_column<T>(f: &[T], out: &mut [T], n: usize, stride: usize, offset: usize, h: f64)
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const CENTRE: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    let at = |k: usize| f[offset + k * stride];
    // node(m) picks the m-th stencil point; sign flips the top-wall mirror
    let comb = |c: &[f64; 5], node: &dyn Fn(usize) -> usize, sign: f64| -> T {
        c.iter()
            .enumerate()
            .fold(T::default(), |s, (m, w)| s + at(node(m)) * (sign * w / (12.0 * h)))
    };
    for k in 0..n {
        let v = if k == 0 {
            comb(&EDGE0, &|m| m, 1.0)
        } else if k == 1 {
            comb(&EDGE1, &|m| m, 1.0)
        } else if k == n - 1 {
            comb(&EDGE0, &|m| n - 1 - m, -1.0)
        } else if k == n - 2 {
            comb(&EDGE1, &|m| n - 1 - m, -1.0)
        } else {
            comb(&CENTRE, &|m| k - 2 + m, 1.0)
        };
        out[offset + k * stride] = v;
    }
}

/// `∂f/∂x3` on the channel lattice for a scalar array (real or complex).
pub(crate) fn d3<T>(f: &[T], dims: [usize; 3], h3: f64) -> Vec<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default + Send + Sync,
{
    let plane = dims[0] * dims[1];
    let mut out = vec![T::default(); f.len()];
    for p in 0..plane {
        d3_column(f, &mut out, dims[2], plane, p, h3);
    }
    out
}

/// Per-plane horizontal transform, `û(k_h, z) = (n0 n1)⁻¹ Σ u e^{-ik_h·x_h}`.
pub(crate) fn forward_planes(values: &[f64], dims: [usize; 3]) -> Vec<Complex64> {
    let n = (dims[0] * dims[1]) as f64;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft2_planes(&mut data, dims, Direction::Forward);
    data.iter_mut().for_each(|v| *v /= n);
    data
}

pub(crate) fn inverse_planes(coeffs: &[Complex64], dims: [usize; 3]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    fft::fft2_planes(&mut data, dims, Direction::Inverse);
    data.iter().map(|v| v.re).collect()
}

/// Horizontal wavenumber tables `(k, k with Nyquist zeroed)` for axes 0, 1.
fn horizontal_wavenumbers(dims: [usize; 3], lengths: [f64; 3]) -> ([Vec<f64>; 2], [Vec<f64>; 2]) {
    let k: [Vec<f64>; 2] = std::array::from_fn(|a| {
        let n = dims[a];
        let s = 2.0 * std::f64::consts::PI / lengths[a];
        (0..n).map(|i| s * fft::mode(i, n) as f64).collect()
    });
    let kd = std::array::from_fn(|a| {
        let n = dims[a];
        (0..n)
            .map(|i| if fft::is_nyquist(i, n) { 0.0 } else { k[a][i] })
            .collect()
    });
    (k, kd)
}

/// Coefficients of `∂_j u` for a per-plane spectrum, `j ∈ {0, 1, 2}`.
fn derivative_hat(c: &[Complex64], grid: &Grid, j: usize) -> Vec<Complex64> {
    let dims = grid.dims;
    if j == 2 {
        return d3(c, dims, grid.spacing()[2]);
    }
    let (_, kd) = horizontal_wavenumbers(dims, grid.lengths);
    c.iter()
        .enumerate()
        .map(|(idx, v)| {
            let i = [idx % dims[0], (idx / dims[0]) % dims[1]];
            v * Complex64::new(0.0, kd[j][i[j]])
        })
        .collect()
}

/// Physical `∂_j u_i`, indexed `[i][j]`.
pub fn gradient(v: &GridField) -> Result<[[Vec<f64>; 3]; 3]> {
    require_channel(v.grid(), "channel gradient")?;
    let grid = *v.grid();
    let hat: [Vec<Complex64>; 3] = std::array::from_fn(|c| forward_planes(v.component(c), grid.dims));
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| inverse_planes(&derivative_hat(&hat[i], &grid, j), grid.dims))
    }))
}

/// Discrete divergence (spectral horizontal plus finite-difference vertical).
pub fn divergence(v: &GridField) -> Result<Vec<f64>> {
    require_channel(v.grid(), "channel divergence")?;
    let grid = *v.grid();
    let dims = grid.dims;
    let mut out = d3(v.component(2), dims, grid.spacing()[2]);
    for j in 0..2 {
        let h = forward_planes(v.component(j), dims);
        let d = inverse_planes(&derivative_hat(&h, &grid, j), dims);
        out.iter_mut().zip(d).for_each(|(o, x)| *o += x);
    }
    Ok(out)
}

pub fn max_divergence(v: &GridField) -> Result<f64> {
    Ok(divergence(v)?.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// `∫ f` over the channel: uniform in `x_h`, trapezoid in `x3`.
fn integrate(grid: &Grid, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let plane = grid.dims[0] * grid.dims[1];
    let cell = grid.cell_volume();
    cell * stats::det_sum_by(grid.len(), |x| grid.vertical_weight(x / plane) * f(x))
}

/// `‖v‖²` with vertical trapezoid weights.
pub fn l2_norm_sq(v: &GridField) -> f64 {
    let c = v.components();
    integrate(v.grid(), |x| c[0][x] * c[0][x] + c[1][x] * c[1][x] + c[2][x] * c[2][x])
}

/// `‖∇v‖²` with horizontal spectral and vertical fourth-order derivatives.
pub fn grad_norm_sq(v: &GridField) -> f64 {
    let g = gradient(v).expect("channel geometry checked by caller");
    integrate(v.grid(), |x| {
        g.iter().flatten().map(|c| c[x] * c[x]).sum::<f64>()
    })
}

/// One horizontal mode of a vector potential: `A(x_h) = 2 Re(a e^{i k·x_h})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialMode {
    pub m: [i64; 2],
    pub re: [f64; 3],
    pub im: [f64; 3],
}

/// `v = curl(E(x3) A(x_h))` for a potential given by its horizontal modes.
pub fn channel_field_from_modes(grid: Grid, modes: &[PotentialMode]) -> Result<GridField> {
    require_channel(&grid, "channel_field_from_modes")?;
    let dims = grid.dims;
    let plane = dims[0] * dims[1];
    let mut a: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); plane]);
    for md in modes {
        let idx = |m: [i64; 2]| -> Result<usize> {
            let i = fft::index_of(m[0], dims[0]);
            let j = fft::index_of(m[1], dims[1]);
            match (i, j) {
                (Some(i), Some(j)) if !fft::is_nyquist(i, dims[0]) && !fft::is_nyquist(j, dims[1]) => {
                    Ok(i + dims[0] * j)
                }
                _ => Err(Error::invalid(format!("mode {:?} is not resolved on {dims:?}", md.m))),
            }
        };
        let p = idx(md.m)?;
        let q = idx([-md.m[0], -md.m[1]])?;
        for c in 0..3 {
            let z = Complex64::new(md.re[c], md.im[c]);
            a[c][p] += z;
            a[c][q] += z.conj();
        }
    }
    Ok(field_from_potential(grid, &a))
}

/// Builds `curl(E A)` from per-plane potential coefficients `a[c][k_h]`.
fn field_from_potential(grid: Grid, a: &[Vec<Complex64>; 3]) -> GridField {
    let dims = grid.dims;
    let plane = dims[0] * dims[1];
    let (_, kd) = horizontal_wavenumbers(dims, grid.lengths);
    let h3 = grid.spacing()[2];
    let mut hat: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); grid.len()]);
    for k in 1..dims[2] - 1 {
        let (e, de) = envelope(k as f64 * h3, grid.lengths[2]);
        for p in 0..plane {
            let ik1 = Complex64::new(0.0, kd[0][p % dims[0]]);
            let ik2 = Complex64::new(0.0, kd[1][p / dims[0]]);
            let x = p + plane * k;
            hat[0][x] = -a[1][p] * de + a[2][p] * ik2 * e;
            hat[1][x] = a[0][p] * de - a[2][p] * ik1 * e;
            hat[2][x] = (a[1][p] * ik1 - a[0][p] * ik2) * e;
        }
    }
    let comps = std::array::from_fn(|c| {
        let mut f = inverse_planes(&hat[c], dims);
        f[..plane].iter_mut().for_each(|v| *v = 0.0);
        let top = plane * (dims[2] - 1);
        f[top..].iter_mut().for_each(|v| *v = 0.0);
        f
    });
    GridField::from_parts(grid, comps)
}

/// Random channel field `curl(E A)` with horizontal potential spectrum
/// `|Â(k_h)| ∝ |k_h|^{-(α+2)}` on the band of `spec`, scaled to unit rms.
pub fn synthesize_channel_field(spec: &SynthesisSpec, grid: Grid) -> Result<GridField> {
    require_channel(&grid, "synthesize_channel_field")?;
    let nyquist = (grid.dims[0].min(grid.dims[1]) / 2) as f64;
    spec.validate(nyquist)?;
    let dims = [grid.dims[0], grid.dims[1], 1];
    let plane = dims[0] * dims[1];
    let mut a: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); plane]);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exponent = spec.target_alpha + 2.0;
    let active = random_phase_coefficients(
        dims,
        2,
        spec.k_min,
        spec.k_max,
        |m| m.powf(-exponent),
        &mut rng,
        &mut a,
    );
    if active == 0 {
        return Err(Error::invalid(format!(
            "band [{}, {}] contains no resolved horizontal modes",
            spec.k_min, spec.k_max
        )));
    }
    let v = field_from_potential(grid, &a);
    let vol: f64 = grid.lengths.iter().product();
    let rms = (l2_norm_sq(&v) / vol).sqrt();
    if rms == 0.0 {
        return Err(Error::invalid("potential produced a zero field"));
    }
    Ok(v.scale(1.0 / rms))
}

/// `ε` must stay below a quarter of the shorter horizontal period.
fn check_horizontal_scale(grid: &Grid, kernel: &MollifierKernel) -> Result<()> {
    if kernel.dim() != KernelDim::Two {
        return Err(Error::invalid("horizontal mollification needs a 2-D kernel"));
    }
    let quarter = grid.lengths[0].min(grid.lengths[1]) / 4.0;
    if kernel.epsilon() >= quarter {
        return Err(Error::invalid(format!(
            "epsilon {} must be below the horizontal quarter period {quarter}",
            kernel.epsilon()
        )));
    }
    Ok(())
}

fn horizontal_multiplier(grid: &Grid, kernel: &MollifierKernel) -> Vec<f64> {
    let dims = grid.dims;
    let (k, _) = horizontal_wavenumbers(dims, grid.lengths);
    (0..dims[0] * dims[1])
        .map(|p| {
            let a = k[0][p % dims[0]];
            let b = k[1][p / dims[0]];
            kernel.multiplier((a * a + b * b).sqrt())
        })
        .collect()
}

fn apply_horizontal(hat: &[Vec<Complex64>; 3], mult: &[f64]) -> [Vec<Complex64>; 3] {
    let plane = mult.len();
    std::array::from_fn(|c| {
        hat[c]
            .par_iter()
            .enumerate()
            .map(|(x, v)| v * mult[x % plane])
            .collect()
    })
}

/// `ṽ_ε(·, x3) = ρ̃_ε * v(·, x3)` on every plane. Asserts that the walls stay
/// exactly zero and that the discrete divergence does not grow by more
/// than `DIVERGENCE_TOLERANCE`.
pub fn horizontal_mollify(v: &GridField, kernel: &MollifierKernel) -> Result<GridField> {
    require_channel(v.grid(), "horizontal_mollify")?;
    check_horizontal_scale(v.grid(), kernel)?;
    let out = horizontal_mollify_unchecked(v, kernel);
    let wall = out.wall_max();
    if wall != 0.0 {
        return Err(Error::Identity {
            what: "wall values of the horizontally mollified field",
            residual: wall,
            tolerance: 0.0,
        });
    }
    let before = max_divergence(v)?;
    let after = max_divergence(&out)?;
    if after > before + DIVERGENCE_TOLERANCE {
        return Err(Error::Identity {
            what: "divergence after horizontal mollification",
            residual: after - before,
            tolerance: DIVERGENCE_TOLERANCE,
        });
    }
    Ok(out)
}

fn horizontal_mollify_unchecked(v: &GridField, kernel: &MollifierKernel) -> GridField {
    let grid = *v.grid();
    let hat: [Vec<Complex64>; 3] = std::array::from_fn(|c| forward_planes(v.component(c), grid.dims));
    let m = horizontal_multiplier(&grid, kernel);
    let sm = apply_horizontal(&hat, &m);
    GridField::from_parts(grid, std::array::from_fn(|c| inverse_planes(&sm[c], grid.dims)))
}

/// `[v]_{ω,hor} ≈ max_{y_h} sup_x |v(x_h + y_h, x3) - v(x)| / ω(|y_h|)` over
/// sampled horizontal lattice displacements, sup over all heights.
pub fn estimate_horizontal_seminorm(v: &GridField, omega: &Modulus, max_radius: f64) -> Result<HolderEstimate> {
    require_channel(v.grid(), "estimate_horizontal_seminorm")?;
    omega.validate()?;
    let quarter = v.grid().lengths[0].min(v.grid().lengths[1]) / 4.0;
    if !(max_radius > 0.0 && max_radius <= quarter * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "max_radius must lie in (0, {quarter}], got {max_radius}"
        )));
    }
    let disp = displacements(v.grid().spacing(), max_radius, [true, true, false]);
    Ok(estimate_over(v, &disp, 0.0, omega, max_radius, quarter))
}

/// Horizontal structure-function exponent on one plane.
pub fn horizontal_zeta2(v: &GridField, plane: usize) -> Result<Zeta2> {
    require_channel(v.grid(), "horizontal_zeta2")?;
    if plane >= v.dims()[2] {
        return Err(Error::invalid("plane index out of range"));
    }
    let n = v.dims()[0].min(v.dims()[1]);
    fit_zeta2(v, n / 8, [true, true, false], &[plane])
}

/// The three properties of horizontal mollification at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub epsilon: f64,
    pub wall_max: f64,
    pub divergence_before: f64,
    pub divergence_after: f64,
    pub sup_diff: f64,
    /// `[v]_{ω,hor} ω(ε)`.
    pub bound: f64,
    pub ratio: f64,
    pub slack: f64,
    pub ok: bool,
}

pub fn lemma_check(v: &GridField, kernel: &MollifierKernel, omega: &Modulus, seminorm: f64) -> Result<LemmaCheck> {
    require_channel(v.grid(), "lemma_check")?;
    check_horizontal_scale(v.grid(), kernel)?;
    let smooth = horizontal_mollify_unchecked(v, kernel);
    let wall_max = smooth.wall_max();
    let divergence_before = max_divergence(v)?;
    let divergence_after = max_divergence(&smooth)?;
    let sup_diff = smooth.max_norm_diff(v);
    let bound = seminorm * omega.eval(kernel.epsilon());
    let ratio = if sup_diff == 0.0 { 0.0 } else { sup_diff / bound };
    let ok = wall_max == 0.0
        && divergence_after <= divergence_before + DIVERGENCE_TOLERANCE
        && sup_diff <= bound * (1.0 + LEMMA_SLACK);
    Ok(LemmaCheck {
        epsilon: kernel.epsilon(),
        wall_max,
        divergence_before,
        divergence_after,
        sup_diff,
        bound,
        ratio,
        slack: LEMMA_SLACK,
        ok,
    })
}

/// Flux terms of the horizontal decomposition at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFluxRow {
    pub epsilon: f64,
    pub pi_total: f64,
    pub pi_smooth: f64,
    pub pi_remainder: f64,
    pub pi_rough: f64,
    pub residual: f64,
    pub nodes: usize,
    /// `∫ (ṽ_h·∇_h)ṽ·ṽ`.
    pub split_horizontal: f64,
    /// `∫ ṽ3 ∂3ṽ·ṽ`.
    pub split_vertical: f64,
    pub omega_eps: f64,
    /// `|pi_rough| / (ω(ε)‖v‖‖∇v‖)`.
    pub rough_ratio: f64,
    /// `|pi_remainder| / (ω(ε)‖v‖‖∇v‖)`.
    pub remainder_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFluxReport {
    pub modulus: Modulus,
    pub norm_v: f64,
    pub norm_grad: f64,
    pub seminorm: f64,
    pub rows: Vec<ChannelFluxRow>,
    pub max_rough_ratio: f64,
    pub max_remainder_ratio: f64,
    /// Largest ratio over the smaller half of the ε values is at most
    /// `bounded_factor` times the largest over the rest.
    pub bounded_factor: f64,
    pub bounded: bool,
}

impl ChannelFluxReport {
    /// Flux CSV schema with the geometry column, plus the ratio columns.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "geometry,epsilon,pi_total,pi_smooth,pi_remainder,pi_rough,residual,nodes,split_horizontal,split_vertical,omega_eps,rough_ratio,remainder_ratio\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "channel,{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.epsilon,
                r.pi_total,
                r.pi_smooth,
                r.pi_remainder,
                r.pi_rough,
                r.residual,
                r.nodes,
                r.split_horizontal,
                r.split_vertical,
                r.omega_eps,
                r.rough_ratio,
                r.remainder_ratio
            ));
        }
        s
    }
}

/// Padded-lattice data for the horizontal flux integrals.
struct Prepared {
    src: Grid,
    pdims: [usize; 3],
    /// Per-node weight on the padded lattice.
    weight: Vec<f64>,
    area: f64,
    plane_weights: Vec<f64>,
    v_hat: [Vec<Complex64>; 3],
    g_hat: [[Vec<Complex64>; 3]; 3],
    map: Vec<Option<usize>>,
    v: [Vec<f64>; 3],
    ve: [Vec<f64>; 3],
    g: [[Vec<f64>; 3]; 3],
}

fn pad_planes(coeffs: &[Complex64], dims: [usize; 3], pdims: [usize; 3]) -> Vec<f64> {
    let mut p = fft::pad(coeffs, dims, pdims, [true, true, false]);
    fft::fft2_planes(&mut p, pdims, Direction::Inverse);
    p.into_iter().map(|c| c.re).collect()
}

fn prepare(v: &GridField, kernel: &MollifierKernel) -> Result<Prepared> {
    let src = *v.grid();
    let dims = src.dims;
    let pd = padded_dims(dims);
    let pdims = [pd[0], pd[1], dims[2]];
    let plane = dims[0] * dims[1];
    let nyq = |idx: usize| fft::is_nyquist(idx % dims[0], dims[0]) || fft::is_nyquist(idx / dims[0] % dims[1], dims[1]);
    let v_hat: [Vec<Complex64>; 3] = std::array::from_fn(|c| {
        let mut h = forward_planes(v.component(c), dims);
        h.iter_mut().enumerate().for_each(|(x, z)| {
            if nyq(x % plane) {
                *z = Complex64::default();
            }
        });
        h
    });
    let m = horizontal_multiplier(&src, kernel);
    let ve_hat = apply_horizontal(&v_hat, &m);
    let g_hat: [[Vec<Complex64>; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| derivative_hat(&ve_hat[i], &src, j)));
    let pp = |c: &Vec<Complex64>| pad_planes(c, dims, pdims);
    let map = (0..plane)
        .map(|p| {
            let (i, j) = (p % dims[0], p / dims[0]);
            if fft::is_nyquist(i, dims[0]) || fft::is_nyquist(j, dims[1]) {
                return None;
            }
            let a = fft::index_of(fft::mode(i, dims[0]), pdims[0])?;
            let b = fft::index_of(fft::mode(j, dims[1]), pdims[1])?;
            Some(a + pdims[0] * b)
        })
        .collect();
    let area = src.lengths[0] * src.lengths[1];
    let h3 = src.spacing()[2];
    let plane_weights: Vec<f64> = (0..dims[2]).map(|k| src.vertical_weight(k) * h3).collect();
    let pplane = pdims[0] * pdims[1];
    let weight = (0..pplane * dims[2])
        .map(|x| plane_weights[x / pplane] * area / pplane as f64)
        .collect();
    Ok(Prepared {
        src,
        pdims,
        weight,
        area,
        plane_weights,
        v: std::array::from_fn(|c| pp(&v_hat[c])),
        ve: std::array::from_fn(|c| pp(&ve_hat[c])),
        g: std::array::from_fn(|i| std::array::from_fn(|j| pp(&g_hat[i][j]))),
        v_hat,
        g_hat,
        map,
    })
}

impl Prepared {
    fn contract_cols(&self, a: &[Vec<f64>; 3], b: &[Vec<f64>; 3], cols: std::ops::Range<usize>) -> f64 {
        stats::det_sum_by(self.weight.len(), |x| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in cols.clone() {
                    s += a[i][x] * b[j][x] * self.g[i][j][x];
                }
            }
            self.weight[x] * s
        })
    }

    fn contract(&self, a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
        self.contract_cols(a, b, 0..3)
    }

    /// Per-plane horizontal coefficients of a padded physical array.
    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        forward_planes(f, self.pdims)
    }

    fn products(&self) -> [[Vec<Complex64>; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let prod: Vec<f64> = self.v[i].iter().zip(&self.v[j]).map(|(a, b)| a * b).collect();
                self.forward(&prod)
            })
        })
    }

    /// `Σ_z w_z A Σ_{k_h} weight(k_h) Σ_ij P̂_ij conj(Ĝ_ij)` for plane-wise coefficients.
    fn pairing(&self, p_hat: &[[Vec<Complex64>; 3]; 3], weight: &[f64]) -> f64 {
        let dims = self.src.dims;
        let plane = dims[0] * dims[1];
        let pplane = self.pdims[0] * self.pdims[1];
        let per_plane: Vec<f64> = (0..dims[2])
            .map(|z| {
                let mut s = 0.0;
                for p in 0..plane {
                    let Some(q) = self.map[p] else { continue };
                    let mut t = Complex64::default();
                    for i in 0..3 {
                        for j in 0..3 {
                            t += p_hat[i][j][q + pplane * z] * self.g_hat[i][j][p + plane * z].conj();
                        }
                    }
                    s += weight[p] * t.re;
                }
                self.plane_weights[z] * self.area * s
            })
            .collect();
        per_plane.iter().sum()
    }

    fn remainder_quadrature(&self, p_hat: &[[Vec<Complex64>; 3]; 3], nodes: &[([f64; 2], f64)]) -> f64 {
        let dims = self.src.dims;
        let plane = dims[0] * dims[1];
        let pplane = self.pdims[0] * self.pdims[1];
        let n = self.weight.len();
        let b_hat: [Vec<Complex64>; 3] = std::array::from_fn(|i| {
            let f: Vec<f64> = (0..n).map(|x| (0..3).map(|j| self.v[j][x] * self.g[i][j][x]).sum()).collect();
            self.forward(&f)
        });
        let c_hat: [Vec<Complex64>; 3] = std::array::from_fn(|j| {
            let f: Vec<f64> = (0..n).map(|x| (0..3).map(|i| self.v[i][x] * self.g[i][j][x]).sum()).collect();
            self.forward(&f)
        });
        let d = self.contract(&self.v, &self.v);
        let (k, _) = horizontal_wavenumbers(dims, self.src.lengths);
        // T(-k_h) = conj T(k_h): one mode per ± pair, twice the real part
        let mut t0 = 0.0;
        let mut modes: Vec<(usize, usize, Complex64)> = Vec::new();
        for p in 0..plane {
            let Some(q) = self.map[p] else { continue };
            let m = [fft::mode(p % dims[0], dims[0]), fft::mode(p / dims[0], dims[1])];
            if !(m[1] > 0 || (m[1] == 0 && m[0] >= 0)) {
                continue;
            }
            let mut t = Complex64::default();
            for z in 0..dims[2] {
                let (sp, sq) = (p + plane * z, q + pplane * z);
                let mut tz = Complex64::default();
                for i in 0..3 {
                    for j in 0..3 {
                        tz += p_hat[i][j][sq] * self.g_hat[i][j][sp].conj();
                    }
                    tz -= self.v_hat[i][sp] * b_hat[i][sq].conj();
                    tz -= self.v_hat[i][sp] * c_hat[i][sq].conj();
                }
                t += tz * self.plane_weights[z];
            }
            if m == [0, 0] {
                t0 = t.re * self.area;
            } else if t != Complex64::default() {
                modes.push((p % dims[0], p / dims[0], 2.0 * t * self.area));
            }
        }
        let per_node: Vec<f64> = nodes
            .par_iter()
            .map(|(y, w)| {
                let e0: Vec<Complex64> = k[0].iter().map(|kk| Complex64::from_polar(1.0, -kk * y[0])).collect();
                let e1: Vec<Complex64> = k[1].iter().map(|kk| Complex64::from_polar(1.0, -kk * y[1])).collect();
                let s: f64 = modes
                    .iter()
                    .map(|&(i, j, t)| {
                        let e = e0[i] * e1[j];
                        t.re * e.re - t.im * e.im
                    })
                    .sum();
                w * (s + t0 + d)
            })
            .collect();
        per_node.iter().sum()
    }

    fn band_radius(&self) -> f64 {
        let dims = self.src.dims;
        let plane = dims[0] * dims[1];
        let (k, _) = horizontal_wavenumbers(dims, self.src.lengths);
        (0..self.v_hat[0].len())
            .filter(|&x| self.v_hat.iter().any(|c| c[x] != Complex64::default()))
            .map(|x| {
                let p = x % plane;
                let (a, b) = (k[0][p % dims[0]], k[1][p / dims[0]]);
                (a * a + b * b).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Horizontal decomposition terms at one scale; the identity is asserted.
/// `rule` fixes the disk quadrature `(radial, azimuthal)`; `None` sizes it
/// from the band of `v`.
pub fn channel_flux_terms(
    v: &GridField,
    kernel: &MollifierKernel,
    rule: Option<(usize, usize)>,
) -> Result<ChannelFluxRow> {
    require_channel(v.grid(), "channel_flux_terms")?;
    check_horizontal_scale(v.grid(), kernel)?;
    let p = prepare(v, kernel)?;
    let p_hat = p.products();
    let m = horizontal_multiplier(&p.src, kernel);
    let pi_total = p.pairing(&p_hat, &m);
    let pi_smooth = p.contract(&p.ve, &p.ve);
    let split_horizontal = p.contract_cols(&p.ve, &p.ve, 0..2);
    let split_vertical = p.contract_cols(&p.ve, &p.ve, 2..3);
    let w: [Vec<f64>; 3] = std::array::from_fn(|c| p.v[c].iter().zip(&p.ve[c]).map(|(a, b)| a - b).collect());
    let pi_rough = p.contract(&w, &w);
    let (radial, azimuthal) = rule.unwrap_or_else(|| {
        let r = BallRule::resolving(kernel.epsilon() * p.band_radius());
        (r.radial, r.azimuthal)
    });
    let nodes = kernel.disk_rule(radial, azimuthal)?;
    let pi_remainder = p.remainder_quadrature(&p_hat, &nodes);
    let residual = (pi_total - (pi_smooth + pi_remainder - pi_rough)).abs();
    let max_term = [pi_total, pi_smooth, pi_remainder, pi_rough]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if residual > IDENTITY_TOLERANCE * max_term {
        return Err(Error::Identity {
            what: "horizontal commutator decomposition",
            residual,
            tolerance: IDENTITY_TOLERANCE * max_term,
        });
    }
    Ok(ChannelFluxRow {
        epsilon: kernel.epsilon(),
        pi_total,
        pi_smooth,
        pi_remainder,
        pi_rough,
        residual,
        nodes: nodes.len(),
        split_horizontal,
        split_vertical,
        omega_eps: 0.0,
        rough_ratio: 0.0,
        remainder_ratio: 0.0,
    })
}

/// Default factor of the boundedness test in [`ChannelFluxReport`].
pub const BOUNDED_FACTOR: f64 = 2.0;

/// Horizontal flux terms along `eps_list` with the ratios against
/// `ω(ε)‖v‖‖∇v‖`.
pub fn channel_flux_bound(v: &GridField, omega: &Modulus, eps_list: &[f64]) -> Result<ChannelFluxReport> {
    require_channel(v.grid(), "channel_flux_bound")?;
    omega.validate()?;
    if eps_list.is_empty() {
        return Err(Error::invalid("eps_list is empty"));
    }
    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let norm_v = l2_norm_sq(v).sqrt();
    let norm_grad = grad_norm_sq(v).sqrt();
    let quarter = v.grid().lengths[0].min(v.grid().lengths[1]) / 4.0;
    let seminorm = estimate_horizontal_seminorm(v, omega, quarter)?.seminorm;
    let base = MollifierKernel::for_grid(v.grid(), eps[0].min(1.0))?;
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let kernel = base.with_epsilon(e)?;
        let mut row = channel_flux_terms(v, &kernel, None)?;
        let scale = omega.eval(e) * norm_v * norm_grad;
        row.omega_eps = omega.eval(e);
        let ratio = |x: f64| if x == 0.0 { 0.0 } else { x.abs() / scale };
        row.rough_ratio = ratio(row.pi_rough);
        row.remainder_ratio = ratio(row.pi_remainder);
        rows.push(row);
    }
    let max_rough_ratio = rows.iter().map(|r| r.rough_ratio).fold(0.0, f64::max);
    let max_remainder_ratio = rows.iter().map(|r| r.remainder_ratio).fold(0.0, f64::max);
    let split = rows.len() / 2;
    let bounded = split == 0 || {
        let peak = |r: &[ChannelFluxRow], f: fn(&ChannelFluxRow) -> f64| r.iter().map(f).fold(0.0, f64::max);
        [|r: &ChannelFluxRow| r.rough_ratio, |r: &ChannelFluxRow| r.remainder_ratio]
            .iter()
            .all(|f| peak(&rows[split..], *f) <= BOUNDED_FACTOR * peak(&rows[..split], *f).max(1e-300))
    };
    Ok(ChannelFluxReport {
        modulus: *omega,
        norm_v,
        norm_grad,
        seminorm,
        rows,
        max_rough_ratio,
        max_remainder_ratio,
        bounded_factor: BOUNDED_FACTOR,
        bounded,
    })
}
