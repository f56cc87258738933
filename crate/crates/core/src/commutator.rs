//! Commutator decomposition of the mollified nonlinearity,
//!
//! `(v⊗v)_ε = v_ε⊗v_ε + r_ε(v,v) - (v-v_ε)⊗(v-v_ε)`,
//! `r_ε(v,v)(x) = ∫ ρ_ε(y) δ_y v(x) ⊗ δ_y v(x) dy`, `δ_y v(x) = v(x-y) - v(x)`,
//!
//! and the flux integrals obtained by contracting each term with `∇v_ε`.
//!
//! Fields are trigonometric polynomials without Nyquist content. Every
//! product is evaluated on a lattice padded by 3/2 per axis, where integrals
//! of triple products are exact, so the decomposition identity holds up to
//! round-off and the ball quadrature error of the remainder.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::fields::{
    forward_transform, inverse_transform, Geometry, Grid, GridField, SpectralField,
    Wavenumbers,
};
use crate::mollify::{check_scale, BallRule, KernelDim, MollifierKernel};
use crate::stats;

/// Relative tolerance of the decomposition identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
/// Inputs with `max|k·v̂| / (max|k| ‖v̂‖)` above this are not divergence-free.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;

/// `u(· - y) - u` as a spectral phase shift, exact for band-limited `u`.
pub fn increment(u: &GridField, y: [f64; 3]) -> Result<GridField> {
    let s = forward_transform(u)?;
    let shifted = shift_spectral(&s, y);
    Ok(inverse_transform(&shifted).sub(u))
}

/// `u(· - y)` in coefficient space.
pub(crate) fn shift_spectral(s: &SpectralField, y: [f64; 3]) -> SpectralField {
    let wn = s.wavenumbers();
    let mut out = s.clone();
    let flag = s.is_divergence_free();
    for c in out.components_mut().iter_mut() {
        for (idx, v) in c.iter_mut().enumerate() {
            let k = wn.at(idx);
            let phase = -(k[0] * y[0] + k[1] * y[1] + k[2] * y[2]);
            *v *= Complex64::from_polar(1.0, phase);
        }
    }
    out.with_flag(flag)
}

/// Symmetric tensor field stored as the six components `00,01,02,11,12,22`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: Grid,
    comps: [Vec<f64>; 6],
}

#[inline]
fn slot(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

impl TensorField {
    pub fn zeros(grid: Grid) -> Self {
        TensorField {
            grid,
            comps: std::array::from_fn(|_| vec![0.0; grid.len()]),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Component `(i, j)`; `(j, i)` is the same array.
    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[slot(i, j)]
    }

    /// `w · T(x) w` at node `idx`.
    pub fn quadratic_form(&self, idx: usize, w: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += w[i] * self.comps[slot(i, j)][idx] * w[j];
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_nodes(kernel: &MollifierKernel, grid: &Grid) -> Result<()> {
    grid.require_periodic("the commutator decomposition")?;
    if kernel.dim() != KernelDim::Three {
        return Err(Error::invalid("periodic flux terms need a 3-D kernel"));
    }
    check_scale(grid, kernel)
}

/// `r_ε(u,u) ≈ Σ_n w_n δ_{y_n}u ⊗ δ_{y_n}u` over the ball rule, whose weights
/// already carry `ρ_ε`.
pub fn remainder(u: &GridField, kernel: &MollifierKernel, rule: BallRule) -> Result<TensorField> {
    check_nodes(kernel, u.grid())?;
    let nodes = kernel.ball_rule(rule)?;
    let s = forward_transform(u)?;
    let grid = *u.grid();
    let mut out = TensorField::zeros(grid);
    for (y, w) in nodes {
        let d = inverse_transform(&shift_spectral(&s, y)).sub(u);
        let dc = d.components();
        for i in 0..3 {
            for j in i..3 {
                let acc = &mut out.comps[slot(i, j)];
                acc.par_iter_mut()
                    .zip(dc[i].par_iter().zip(dc[j].par_iter()))
                    .for_each(|(a, (p, q))| *a += w * p * q);
            }
        }
    }
    Ok(out)
}

/// How the remainder integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RemainderMethod {
    /// Ball quadrature with the given node counts.
    Quadrature { rule: BallRule },
    /// Ball quadrature sized by [`BallRule::resolving`] for the field's band.
    Adaptive,
    /// Algebraic expansion `r_ε = (v⊗v)_ε - v_ε⊗v - v⊗v_ε + v⊗v`; makes the
    /// decomposition identity hold by construction, so it is only an oracle.
    Expansion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxOptions {
    pub remainder: RemainderMethod,
    pub identity_tolerance: f64,
}

impl Default for FluxOptions {
    fn default() -> Self {
        FluxOptions {
            remainder: RemainderMethod::Adaptive,
            identity_tolerance: IDENTITY_TOLERANCE,
        }
    }
}

/// The four flux integrals at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxTerms {
    pub epsilon: f64,
    /// `∫ (v⊗v)_ε : ∇v_ε`.
    pub pi_total: f64,
    /// `∫ (v_ε⊗v_ε) : ∇v_ε`.
    pub pi_smooth: f64,
    /// `∫ r_ε(v,v) : ∇v_ε`.
    pub pi_remainder: f64,
    /// `∫ (v-v_ε)⊗(v-v_ε) : ∇v_ε`.
    pub pi_rough: f64,
    /// `|pi_total - (pi_smooth + pi_remainder - pi_rough)|`.
    pub residual: f64,
    /// Ball quadrature nodes used for the remainder (0 for the expansion).
    pub nodes: usize,
}

impl FluxTerms {
    pub fn max_term(&self) -> f64 {
        [self.pi_total, self.pi_smooth, self.pi_remainder, self.pi_rough]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn relative_residual(&self) -> f64 {
        let m = self.max_term();
        if m == 0.0 {
            0.0
        } else {
            self.residual / m
        }
    }
}

/// Padded dims `⌈3n/2⌉` rounded up to even, per axis.
pub(crate) fn padded_dims(dims: [usize; 3]) -> [usize; 3] {
    dims.map(|n| {
        if n == 1 {
            return 1;
        }
        let m = (3 * n).div_ceil(2);
        m + m % 2
    })
}

/// Everything the flux integrals need, on the padded lattice.
struct Prepared {
    src: Grid,
    pdims: [usize; 3],
    cell: f64,
    vol: f64,
    /// Source-lattice coefficients of `v` (Nyquist stripped).
    v_hat: [Vec<Complex64>; 3],
    /// Source-lattice coefficients of `∂_j v_ε,i`.
    g_hat: [[Vec<Complex64>; 3]; 3],
    /// Source index -> padded index, `None` for Nyquist entries.
    map: Vec<Option<usize>>,
    v: [Vec<f64>; 3],
    ve: [Vec<f64>; 3],
    g: [[Vec<f64>; 3]; 3],
}

fn to_padded(coeffs: &[Complex64], dims: [usize; 3], pdims: [usize; 3]) -> Vec<f64> {
    let mut p = fft::pad(coeffs, dims, pdims, [true; 3]);
    fft::fft3(&mut p, pdims, Direction::Inverse);
    p.into_iter().map(|c| c.re).collect()
}

fn forward_padded(values: &[f64], pdims: [usize; 3]) -> Vec<Complex64> {
    let n = values.len() as f64;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft3(&mut data, pdims, Direction::Forward);
    data.iter_mut().for_each(|v| *v /= n);
    data
}

fn source_to_padded(dims: [usize; 3], pdims: [usize; 3]) -> Vec<Option<usize>> {
    let [n0, n1, n2] = dims;
    let mut out = Vec::with_capacity(n0 * n1 * n2);
    for k in 0..n2 {
        for j in 0..n1 {
            for i in 0..n0 {
                if fft::is_nyquist(i, n0) || fft::is_nyquist(j, n1) || fft::is_nyquist(k, n2) {
                    out.push(None);
                    continue;
                }
                let pi = fft::index_of(fft::mode(i, n0), pdims[0]);
                let pj = fft::index_of(fft::mode(j, n1), pdims[1]);
                let pk = fft::index_of(fft::mode(k, n2), pdims[2]);
                out.push(match (pi, pj, pk) {
                    (Some(a), Some(b), Some(c)) => Some(a + pdims[0] * (b + pdims[1] * c)),
                    _ => None,
                });
            }
        }
    }
    out
}

/// Relative divergence `max|k·v̂| / (max|k| ‖v̂‖)`.
pub fn relative_divergence(s: &SpectralField) -> f64 {
    let norm = s.coefficient_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let wn = s.wavenumbers();
    let kmax = (0..s.grid().len()).map(|i| wn.norm_at(i)).fold(0.0, f64::max);
    s.max_divergence() / (kmax.max(1e-300) * norm)
}

fn prepare(v: &GridField, kernel: &MollifierKernel) -> Result<Prepared> {
    check_nodes(kernel, v.grid())?;
    let s = forward_transform(v)?.strip_nyquist();
    let div = relative_divergence(&s);
    if div > DIVERGENCE_TOLERANCE {
        return Err(Error::invalid(format!(
            "velocity is not divergence-free (relative divergence {div:e})"
        )));
    }
    let src = *v.grid();
    let dims = src.dims;
    let pdims = padded_dims(dims);
    let m = kernel.spectral_multiplier(&s.wavenumbers());
    let se = s.apply_multiplier(&m);
    let g_hat = se.gradient();
    let v_hat = s.components().clone();
    let pv = |c: &Vec<Complex64>| to_padded(c, dims, pdims);
    let vp = std::array::from_fn(|c| pv(&v_hat[c]));
    let vep = std::array::from_fn(|c| pv(&se.components()[c]));
    let gp = std::array::from_fn(|i| std::array::from_fn(|j| pv(&g_hat[i][j])));
    let vol: f64 = src.lengths.iter().product();
    Ok(Prepared {
        src,
        pdims,
        cell: vol / pdims.iter().product::<usize>() as f64,
        vol,
        v_hat,
        g_hat,
        map: source_to_padded(dims, pdims),
        v: vp,
        ve: vep,
        g: gp,
    })
}

impl Prepared {
    fn len(&self) -> usize {
        self.pdims.iter().product()
    }

    /// `∫ a_i b_j G_ij` on the padded lattice.
    fn contract(&self, a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
        self.cell
            * stats::det_sum_by(self.len(), |x| {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += a[i][x] * b[j][x] * self.g[i][j][x];
                    }
                }
                s
            })
    }

    /// Padded-lattice coefficients of `v_i v_j` for `i ≤ j`.
    fn products(&self) -> [Vec<Complex64>; 6] {
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        pairs.map(|(i, j)| {
            let prod: Vec<f64> = self.v[i].iter().zip(&self.v[j]).map(|(a, b)| a * b).collect();
            forward_padded(&prod, self.pdims)
        })
    }

    /// `vol · Σ_k m(k) Σ_ij P̂_ij(k) conj(Ĝ_ij(k))`.
    fn spectral_pairing(&self, p_hat: &[Vec<Complex64>; 6], weight: impl Fn(usize) -> f64 + Sync) -> f64 {
        self.vol
            * stats::det_sum_by(self.map.len(), |idx| {
                let Some(pidx) = self.map[idx] else { return 0.0 };
                let mut s = Complex64::default();
                for i in 0..3 {
                    for j in 0..3 {
                        s += p_hat[slot(i, j)][pidx] * self.g_hat[i][j][idx].conj();
                    }
                }
                weight(idx) * s.re
            })
    }

    /// `Σ_n w_n ∫ δ_{y_n}v ⊗ δ_{y_n}v : ∇v_ε`, with the `x`-integral in closed
    /// form: each term is a lag correlation `Σ_k T(k) e^{-ik·y}`.
    fn remainder_quadrature(&self, p_hat: &[Vec<Complex64>; 6], nodes: &[([f64; 3], f64)]) -> f64 {
        let n = self.len();
        // B_i = Σ_j v_j G_ij, C_j = Σ_i v_i G_ij
        let b_hat: [Vec<Complex64>; 3] = std::array::from_fn(|i| {
            let f: Vec<f64> = (0..n)
                .map(|x| (0..3).map(|j| self.v[j][x] * self.g[i][j][x]).sum())
                .collect();
            forward_padded(&f, self.pdims)
        });
        let c_hat: [Vec<Complex64>; 3] = std::array::from_fn(|j| {
            let f: Vec<f64> = (0..n)
                .map(|x| (0..3).map(|i| self.v[i][x] * self.g[i][j][x]).sum())
                .collect();
            forward_padded(&f, self.pdims)
        });
        let d = self.contract(&self.v, &self.v);

        let dims = self.src.dims;
        let wn = Wavenumbers::new(&self.src);
        // T(-k) = conj T(k) for real fields: keep one mode per ± pair and
        // take twice the real part
        let mut t0 = 0.0;
        let mut modes: Vec<(usize, usize, Complex64)> = Vec::new();
        for (idx, p) in self.map.iter().enumerate() {
            let Some(pidx) = *p else { continue };
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            let m = [fft::mode(i, dims[0]), fft::mode(j, dims[1]), fft::mode(k, dims[2])];
            let upper = m[2] > 0 || (m[2] == 0 && (m[1] > 0 || (m[1] == 0 && m[0] >= 0)));
            if !upper {
                continue;
            }
            let mut t = Complex64::default();
            for a in 0..3 {
                for b in 0..3 {
                    t += p_hat[slot(a, b)][pidx] * self.g_hat[a][b][idx].conj();
                }
                t -= self.v_hat[a][idx] * b_hat[a][pidx].conj();
                t -= self.v_hat[a][idx] * c_hat[a][pidx].conj();
            }
            if m == [0, 0, 0] {
                t0 = t.re * self.vol;
            } else if t != Complex64::default() {
                modes.push((i + dims[0] * j, k, 2.0 * t * self.vol));
            }
        }
        modes.sort_by_key(|&(ij, k, _)| (k, ij));
        let plane = dims[0] * dims[1];
        let per_node: Vec<f64> = nodes
            .par_iter()
            .map(|(y, w)| {
                let phase = |a: usize| -> Vec<Complex64> {
                    wn.k[a].iter().map(|k| Complex64::from_polar(1.0, -k * y[a])).collect()
                };
                let (e0, e1, e2) = (phase(0), phase(1), phase(2));
                let e01: Vec<Complex64> = (0..plane).map(|ij| e0[ij % dims[0]] * e1[ij / dims[0]]).collect();
                let s: f64 = modes
                    .iter()
                    .map(|&(ij, k, t)| {
                        let e = e01[ij] * e2[k];
                        t.re * e.re - t.im * e.im
                    })
                    .sum();
                w * (s + t0 + d)
            })
            .collect();
        per_node.iter().sum()
    }

    /// Largest `|k|` carried by `v`.
    fn band_radius(&self) -> f64 {
        let wn = Wavenumbers::new(&self.src);
        (0..self.map.len())
            .filter(|&idx| self.v_hat.iter().any(|c| c[idx] != Complex64::default()))
            .map(|idx| wn.norm_at(idx))
            .fold(0.0, f64::max)
    }
}

/// [`flux_terms_with`] using the default options.
pub fn flux_terms(v: &GridField, kernel: &MollifierKernel) -> Result<FluxTerms> {
    flux_terms_with(v, kernel, &FluxOptions::default())
}

/// The four flux integrals at scale `kernel.epsilon()`. The decomposition
/// identity is checked before returning; a residual above
/// `identity_tolerance · max|term|` is an error.
pub fn flux_terms_with(v: &GridField, kernel: &MollifierKernel, opts: &FluxOptions) -> Result<FluxTerms> {
    let p = prepare(v, kernel)?;
    let p_hat = p.products();
    let wn = Wavenumbers::new(&p.src);
    let mult: Vec<f64> = (0..p.map.len()).map(|idx| kernel.multiplier(wn.norm_at(idx))).collect();
    let pi_total = p.spectral_pairing(&p_hat, |idx| mult[idx]);
    let pi_smooth = p.contract(&p.ve, &p.ve);
    let w: [Vec<f64>; 3] =
        std::array::from_fn(|c| p.v[c].iter().zip(&p.ve[c]).map(|(a, b)| a - b).collect());
    let pi_rough = p.contract(&w, &w);

    let (pi_remainder, nodes) = match opts.remainder {
        RemainderMethod::Expansion => {
            let cross = p.contract(&p.ve, &p.v) + p.contract(&p.v, &p.ve) - p.contract(&p.v, &p.v);
            (pi_total - cross, 0)
        }
        RemainderMethod::Quadrature { rule } => {
            let nodes = kernel.ball_rule(rule)?;
            (p.remainder_quadrature(&p_hat, &nodes), nodes.len())
        }
        RemainderMethod::Adaptive => {
            let rule = BallRule::resolving(kernel.epsilon() * p.band_radius());
            let nodes = kernel.ball_rule(rule)?;
            (p.remainder_quadrature(&p_hat, &nodes), nodes.len())
        }
    };

    let terms = FluxTerms {
        epsilon: kernel.epsilon(),
        pi_total,
        pi_smooth,
        pi_remainder,
        pi_rough,
        residual: (pi_total - (pi_smooth + pi_remainder - pi_rough)).abs(),
        nodes,
    };
    let tol = opts.identity_tolerance * terms.max_term();
    if terms.residual > tol {
        return Err(Error::Identity {
            what: "commutator decomposition",
            residual: terms.residual,
            tolerance: tol,
        });
    }
    Ok(terms)
}

/// `∫ r_ε : ∇v_ε` computed from an explicit remainder tensor field on the
/// padded lattice (the pointwise route).
pub fn remainder_pairing(v: &GridField, kernel: &MollifierKernel, rule: BallRule) -> Result<f64> {
    let p = prepare(v, kernel)?;
    let padded = Grid::new(p.pdims, p.src.lengths, Geometry::Periodic3)?;
    let comps: [Vec<f64>; 3] = p.v.clone();
    let vp = GridField::new(padded, comps)?;
    let r = remainder(&vp, kernel, rule)?;
    Ok(p.cell
        * stats::det_sum_by(p.len(), |x| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += r.component(i, j)[x] * p.g[i][j][x];
                }
            }
            s
        }))
}

/// Norms entering the viscous rough-term estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBound {
    pub epsilon: f64,
    pub alpha: f64,
    pub seminorm: f64,
    pub pi_rough: f64,
    pub norm_v: f64,
    pub norm_diff: f64,
    pub norm_grad_smooth: f64,
    /// `f_α (2‖v‖)^{1+α} ‖∇v_ε‖^{1-α}`.
    pub bound: f64,
    /// `f_α ‖v - v_ε‖^{1+α} ‖∇v_ε‖^{1-α}`.
    pub tight_bound: f64,
    /// `C^α` times `bound`, with `C = ∫|∇ρ|` from the gradient estimate.
    pub bound_with_constant: f64,
    pub slack: f64,
    /// `|pi_rough| > (1 + slack) · bound`.
    pub violated: bool,
}

/// Slack allowed on the split bound before it is flagged.
pub const SPLIT_SLACK: f64 = 0.05;

/// The rough-term estimate `|∫(v-v_ε)⊗(v-v_ε):∇v_ε| ≤ f_α (2‖v‖)^{1+α} ‖∇v_ε‖^{1-α}`.
/// A violation is reported, not raised: it means `seminorm` underestimates `[v]_α`.
pub fn viscous_split_bound(
    v: &GridField,
    kernel: &MollifierKernel,
    alpha: f64,
    seminorm: f64,
) -> Result<SplitBound> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(seminorm >= 0.0 && seminorm.is_finite()) {
        return Err(Error::invalid("seminorm must be finite and non-negative"));
    }
    let opts = FluxOptions {
        remainder: RemainderMethod::Expansion,
        ..FluxOptions::default()
    };
    let terms = flux_terms_with(v, kernel, &opts)?;
    let s = forward_transform(v)?.strip_nyquist();
    let m = kernel.spectral_multiplier(&s.wavenumbers());
    let se = s.apply_multiplier(&m);
    let diff: Vec<f64> = m.iter().map(|x| 1.0 - x).collect();
    let norm_v = (2.0 * s.energy()).sqrt();
    let norm_diff = (2.0 * s.apply_multiplier(&diff).energy()).sqrt();
    let norm_grad_smooth = se.grad_norm_sq().sqrt();
    let g = norm_grad_smooth.powf(1.0 - alpha);
    let bound = seminorm * (2.0 * norm_v).powf(1.0 + alpha) * g;
    let tight_bound = seminorm * norm_diff.powf(1.0 + alpha) * g;
    let violated = terms.pi_rough.abs() > (1.0 + SPLIT_SLACK) * bound;
    Ok(SplitBound {
        epsilon: kernel.epsilon(),
        alpha,
        seminorm,
        pi_rough: terms.pi_rough,
        norm_v,
        norm_diff,
        norm_grad_smooth,
        bound,
        tight_bound,
        bound_with_constant: kernel.grad_l1().powf(alpha) * bound,
        slack: SPLIT_SLACK,
        violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn shear(g: Grid) -> GridField {
        GridField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0])
    }

    #[test]
    fn increment_examples() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let u = shear(g);
        assert!(increment(&u, [0.0; 3]).unwrap().max_abs() < 1e-14);
        let d = increment(&u, [0.0, std::f64::consts::PI, 0.0]).unwrap();
        let expect = u.scale(-2.0);
        assert!(d.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn lattice_increment_matches_roll() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let u = crate::fields::random_band_limited(3, g, 7.0).unwrap();
        let h = g.spacing();
        for m in [[1i64, 0, 0], [2, -3, 5], [-7, 4, 1]] {
            let y = [m[0] as f64 * h[0], m[1] as f64 * h[1], m[2] as f64 * h[2]];
            let d = increment(&u, y).unwrap();
            let roll = u.roll(m).sub(&u);
            assert!(d.max_abs_diff(&roll) <= 1e-12);
        }
    }

    #[test]
    fn remainder_of_shear_has_one_component() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let k = MollifierKernel::for_grid(&g, 0.3).unwrap();
        let r = remainder(&shear(g), &k, BallRule::default()).unwrap();
        assert!(r.component(0, 0).iter().any(|v| v.abs() > 1e-3));
        for (i, j) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert!(r.component(i, j).iter().all(|v| v.abs() < 1e-14));
        }
        let c = remainder(&GridField::from_fn(g, |_| [1.0, 2.0, 3.0]), &k, BallRule::default()).unwrap();
        assert!(c.max_abs() < 1e-13);
        assert!(remainder(&shear(g), &k, BallRule::cube(2)).is_err());
    }

    #[test]
    fn shear_flux_vanishes() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let k = MollifierKernel::for_grid(&g, 0.4).unwrap();
        let t = flux_terms(&shear(g), &k).unwrap();
        assert!(t.pi_total.abs() < 1e-12);
        assert!(t.pi_smooth.abs() < 1e-12);
        let z = flux_terms(&GridField::zeros(g), &k).unwrap();
        assert_eq!(z.max_term(), 0.0);
    }

    #[test]
    fn decomposition_identity_on_random_field() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let v = crate::fields::random_band_limited(21, g, 4.0).unwrap();
        for eps in [0.1, 0.2, 0.4] {
            let k = MollifierKernel::for_grid(&g, eps).unwrap();
            let t = flux_terms(&v, &k).unwrap();
            assert!(t.relative_residual() <= 1e-8, "{t:?}");
            let e = flux_terms_with(
                &v,
                &k,
                &FluxOptions {
                    remainder: RemainderMethod::Expansion,
                    ..FluxOptions::default()
                },
            )
            .unwrap();
            assert!((e.pi_remainder - t.pi_remainder).abs() <= 1e-9 * t.max_term());
        }
    }

    #[test]
    fn pointwise_and_lag_remainders_agree() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let v = crate::fields::random_band_limited(8, g, 3.0).unwrap();
        let k = MollifierKernel::for_grid(&g, 0.3).unwrap();
        let rule = BallRule::cube(7);
        let lag = flux_terms_with(
            &v,
            &k,
            &FluxOptions {
                remainder: RemainderMethod::Quadrature { rule },
                identity_tolerance: 1.0,
            },
        )
        .unwrap();
        let point = remainder_pairing(&v, &k, rule).unwrap();
        assert!((lag.pi_remainder - point).abs() <= 1e-10 * lag.max_term());
    }

    #[test]
    fn rejects_compressible_input() {
        let g = Grid::periodic([8, 8, 8]).unwrap();
        let v = GridField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let k = MollifierKernel::for_grid(&g, 0.3).unwrap();
        assert!(flux_terms(&v, &k).is_err());
    }

    #[test]
    fn split_bound_trivial_cases() {
        let g = Grid::periodic([16, 16, 16]).unwrap();
        let k = MollifierKernel::for_grid(&g, 0.2).unwrap();
        let z = viscous_split_bound(&GridField::zeros(g), &k, 0.5, 0.0).unwrap();
        assert_eq!(z.bound, 0.0);
        assert_eq!(z.pi_rough, 0.0);
        let s = viscous_split_bound(&shear(g), &k, 1.0, 1.0).unwrap();
        assert!(s.bound.is_finite() && !s.violated);
    }

    #[test]
    fn padded_dims_are_even() {
        assert_eq!(padded_dims([16, 32, 8]), [24, 48, 12]);
        assert_eq!(padded_dims([6, 10, 1]), [10, 16, 1]);
    }
}
