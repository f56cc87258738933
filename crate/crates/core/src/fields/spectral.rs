use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{Geometry, Grid, GridField};
use crate::error::{Error, Result};
use crate::fft::{self, Direction};

/// Fourier coefficients of a periodic field.
///
/// Convention: `u(x) = Σ_k û(k) e^{i k·x}`, so `û(k) = N⁻¹ Σ_x u(x) e^{-i k·x}`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
    divergence_free: bool,
}

/// Physical wavenumbers of a periodic lattice, one table per axis.
#[derive(Clone, Debug)]
pub struct Wavenumbers {
    pub dims: [usize; 3],
    /// `k[a][i]` is the wavenumber of FFT index `i` on axis `a`.
    pub k: [Vec<f64>; 3],
    /// Same as `k` with Nyquist entries zeroed, for odd-order derivatives.
    pub k_deriv: [Vec<f64>; 3],
}

impl Wavenumbers {
    pub fn new(grid: &Grid) -> Self {
        let k = std::array::from_fn(|a| {
            let n = grid.dims[a];
            let scale = 2.0 * PI / grid.lengths[a];
            (0..n).map(|i| scale * fft::mode(i, n) as f64).collect::<Vec<_>>()
        });
        let k_deriv = std::array::from_fn(|a| {
            let n = grid.dims[a];
            let kk: &Vec<f64> = &k[a];
            (0..n)
                .map(|i| if fft::is_nyquist(i, n) { 0.0 } else { kk[i] })
                .collect::<Vec<_>>()
        });
        Wavenumbers {
            dims: grid.dims,
            k,
            k_deriv,
        }
    }

    /// Wavevector at linear index `idx`.
    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let [n0, n1, _] = self.dims;
        let i = idx % n0;
        let j = (idx / n0) % n1;
        let k = idx / (n0 * n1);
        [self.k[0][i], self.k[1][j], self.k[2][k]]
    }

    #[inline]
    pub fn deriv_at(&self, idx: usize) -> [f64; 3] {
        let [n0, n1, _] = self.dims;
        let i = idx % n0;
        let j = (idx / n0) % n1;
        let k = idx / (n0 * n1);
        [self.k_deriv[0][i], self.k_deriv[1][j], self.k_deriv[2][k]]
    }

    /// True when any axis index of `idx` is a Nyquist index.
    #[inline]
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        let [n0, n1, n2] = self.dims;
        let i = idx % n0;
        let j = (idx / n0) % n1;
        let k = idx / (n0 * n1);
        fft::is_nyquist(i, n0) || fft::is_nyquist(j, n1) || fft::is_nyquist(k, n2)
    }

    #[inline]
    pub fn norm_at(&self, idx: usize) -> f64 {
        let k = self.at(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }
}

impl SpectralField {
    pub fn new(grid: Grid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        grid.require_periodic("a spectral field")?;
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::invalid("coefficient arrays do not match the lattice"));
        }
        Ok(SpectralField {
            grid,
            comps,
            divergence_free: false,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        SpectralField {
            grid,
            comps: std::array::from_fn(|_| vec![Complex64::default(); n]),
            divergence_free: true,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    #[inline]
    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        self.divergence_free = false;
        &mut self.comps
    }

    #[inline]
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub(crate) fn with_flag(mut self, divergence_free: bool) -> Self {
        self.divergence_free = divergence_free;
        self
    }

    pub fn wavenumbers(&self) -> Wavenumbers {
        Wavenumbers::new(&self.grid)
    }

    /// Multiplies every component by the real multiplier `m[idx]`.
    pub fn apply_multiplier(&self, m: &[f64]) -> SpectralField {
        let comps = std::array::from_fn(|c| {
            self.comps[c]
                .par_iter()
                .zip(m.par_iter())
                .map(|(v, s)| v * s)
                .collect()
        });
        SpectralField {
            grid: self.grid,
            comps,
            divergence_free: self.divergence_free,
        }
    }

    /// Zeroes every coefficient that sits on a Nyquist plane.
    pub fn strip_nyquist(&self) -> SpectralField {
        let wn = self.wavenumbers();
        let mut out = self.clone();
        for c in 0..3 {
            for (idx, v) in out.comps[c].iter_mut().enumerate() {
                if wn.touches_nyquist(idx) {
                    *v = Complex64::default();
                }
            }
        }
        out
    }

    /// Largest `|k·û(k)|` over all modes.
    pub fn max_divergence(&self) -> f64 {
        let wn = self.wavenumbers();
        (0..self.grid.len())
            .map(|idx| {
                let k = wn.at(idx);
                (self.comps[0][idx] * k[0] + self.comps[1][idx] * k[1] + self.comps[2][idx] * k[2]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `sqrt(Σ_k |û(k)|²)` over all components.
    pub fn coefficient_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm_sqr()))
            .sum::<f64>()
            .sqrt()
    }

    /// Kinetic energy `½‖u‖²` from the coefficients (Parseval).
    pub fn energy(&self) -> f64 {
        let vol: f64 = self.grid.lengths.iter().product();
        0.5 * vol * self.coefficient_norm().powi(2)
    }

    /// `‖∇u‖²` from the coefficients, Nyquist modes excluded.
    pub fn grad_norm_sq(&self) -> f64 {
        let wn = self.wavenumbers();
        let vol: f64 = self.grid.lengths.iter().product();
        let s = crate::stats::det_sum_by(self.grid.len(), |idx| {
            let k = wn.deriv_at(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            k2 * (0..3).map(|c| self.comps[c][idx].norm_sqr()).sum::<f64>()
        });
        vol * s
    }

    /// Coefficients of `∂_j u_i`, indexed `[i][j]`.
    pub fn gradient(&self) -> [[Vec<Complex64>; 3]; 3] {
        let wn = self.wavenumbers();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.comps[i]
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| v * Complex64::new(0.0, wn.deriv_at(idx)[j]))
                    .collect()
            })
        })
    }

    /// Max over components of `|û_c(0)|`.
    pub fn mean_magnitude(&self) -> f64 {
        self.comps.iter().map(|c| c[0].norm()).fold(0.0, f64::max)
    }
}

/// Forward transform of a periodic field.
pub fn forward_transform(f: &GridField) -> Result<SpectralField> {
    f.grid().require_periodic("forward_transform")?;
    let grid = *f.grid();
    let comps = std::array::from_fn(|c| forward_scalar(f.component(c), grid.dims));
    Ok(SpectralField {
        grid,
        comps,
        divergence_free: false,
    })
}

/// Inverse transform; the imaginary residue of round-off is discarded.
pub fn inverse_transform(s: &SpectralField) -> GridField {
    let grid = s.grid;
    let comps = std::array::from_fn(|c| inverse_scalar(&s.comps[c], grid.dims));
    GridField::from_parts(grid, comps)
}

pub(crate) fn forward_scalar(values: &[f64], dims: [usize; 3]) -> Vec<Complex64> {
    let n = values.len() as f64;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft3(&mut data, dims, Direction::Forward);
    data.iter_mut().for_each(|v| *v /= n);
    data
}

pub(crate) fn inverse_scalar(coeffs: &[Complex64], dims: [usize; 3]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    fft::fft3(&mut data, dims, Direction::Inverse);
    data.iter().map(|v| v.re).collect()
}

/// Leray projector `û ← (I - k kᵀ/|k|²) û`, `û(0) ← 0`.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let wn = f.wavenumbers();
    let n = f.grid.len();
    let mut comps: [Vec<Complex64>; 3] = f.comps.clone();
    for idx in 0..n {
        let k = wn.at(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            for c in comps.iter_mut() {
                c[idx] = Complex64::default();
            }
            continue;
        }
        let dot = comps[0][idx] * k[0] + comps[1][idx] * k[1] + comps[2][idx] * k[2];
        let s = dot / k2;
        for (a, c) in comps.iter_mut().enumerate() {
            c[idx] -= s * k[a];
        }
    }
    SpectralField {
        grid: f.grid,
        comps,
        divergence_free: true,
    }
}

/// `‖∇v‖²` of a periodic field by spectral differentiation.
pub fn grad_norm_sq_periodic(f: &GridField) -> Result<f64> {
    Ok(forward_transform(f)?.grad_norm_sq())
}

/// Physical-space gradient `∂_j u_i` of a periodic field, indexed `[i][j]`.
pub fn gradient_field(s: &SpectralField) -> [[Vec<f64>; 3]; 3] {
    let g = s.gradient();
    let dims = s.grid.dims;
    g.map(|row| row.map(|c| inverse_scalar(&c, dims)))
}

/// Geometry-dispatching `‖∇v‖²`.
pub fn grad_norm_sq(f: &GridField) -> Result<f64> {
    match f.grid().geometry {
        Geometry::Periodic3 => grad_norm_sq_periodic(f),
        Geometry::Channel => Ok(crate::channel::grad_norm_sq(f)),
    }
}
