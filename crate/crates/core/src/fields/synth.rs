use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField};
use super::spectral::{inverse_transform, leray_project, SpectralField};
use crate::error::{Error, Result};
use crate::fft;

/// Parameters of a random-phase field with a power-law spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub target_alpha: f64,
    pub seed: u64,
    /// Active shell `k_min ≤ |k| ≤ k_max`, in units of the fundamental wavenumber.
    pub k_min: f64,
    pub k_max: f64,
}

impl SynthesisSpec {
    pub fn new(target_alpha: f64, seed: u64, k_min: f64, k_max: f64) -> Self {
        SynthesisSpec {
            target_alpha,
            seed,
            k_min,
            k_max,
        }
    }

    /// Full band `1 ≤ |k| ≤ N/2 - 1` of the coarsest axis.
    pub fn full_band(target_alpha: f64, seed: u64, grid: &Grid) -> Self {
        let n = *grid.dims.iter().min().unwrap_or(&2);
        Self::new(target_alpha, seed, 1.0, (n / 2) as f64 - 1.0)
    }

    pub fn validate(&self, nyquist: f64) -> Result<()> {
        if !(self.target_alpha > 0.0 && self.target_alpha < 1.0) {
            return Err(Error::invalid(format!(
                "target_alpha must lie in (0,1), got {}",
                self.target_alpha
            )));
        }
        if !(self.k_min >= 1.0 && self.k_min <= self.k_max && self.k_max <= nyquist) {
            return Err(Error::invalid(format!(
                "band must satisfy 1 <= k_min <= k_max <= {nyquist}, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }
}

/// True for the representative of each `±m` pair that receives a fresh draw.
#[inline]
pub(crate) fn is_canonical(m: [i64; 3]) -> bool {
    m[2] > 0 || (m[2] == 0 && (m[1] > 0 || (m[1] == 0 && m[0] > 0)))
}

/// Fills Hermitian-symmetric random-phase coefficients with magnitude
/// `amplitude(|m|)` on the shell `k_min ≤ |m| ≤ k_max`, skipping Nyquist planes.
/// `|m|` is measured in units of the fundamental wavenumber of each axis.
/// Returns the number of active modes.
pub(crate) fn random_phase_coefficients(
    dims: [usize; 3],
    fourier_axes: usize,
    k_min: f64,
    k_max: f64,
    amplitude: impl Fn(f64) -> f64,
    rng: &mut ChaCha8Rng,
    comps: &mut [Vec<Complex64>; 3],
) -> usize {
    let [n0, n1, n2] = dims;
    let n2f = if fourier_axes == 3 { n2 } else { 1 };
    let mut active = 0;
    for k in 0..n2f {
        for j in 0..n1 {
            for i in 0..n0 {
                if fft::is_nyquist(i, n0) || fft::is_nyquist(j, n1) || (fourier_axes == 3 && fft::is_nyquist(k, n2)) {
                    continue;
                }
                let m = [
                    fft::mode(i, n0),
                    fft::mode(j, n1),
                    if fourier_axes == 3 { fft::mode(k, n2) } else { 0 },
                ];
                if !is_canonical(m) {
                    continue;
                }
                let mag = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
                if mag < k_min - 1e-12 || mag > k_max + 1e-12 {
                    continue;
                }
                active += 1;
                let amp = amplitude(mag);
                let idx = i + n0 * (j + n1 * k);
                let conj_idx = fft::index_of(-m[0], n0).unwrap()
                    + n0 * (fft::index_of(-m[1], n1).unwrap()
                        + n1 * if fourier_axes == 3 { fft::index_of(-m[2], n2).unwrap() } else { 0 });
                for c in comps.iter_mut() {
                    let phase = rng.gen::<f64>() * 2.0 * PI;
                    let v = Complex64::from_polar(amp, phase);
                    c[idx] = v;
                    c[conj_idx] = v.conj();
                }
            }
        }
    }
    active
}

/// Divergence-free, zero-mean random field with coefficient magnitudes
/// `|k|^{-(α + 3/2)}` and independent uniform phases, scaled so that the
/// root-mean-square of `|v|` is one.
pub fn synthesize_holder_field(spec: &SynthesisSpec, grid: Grid) -> Result<GridField> {
    Ok(inverse_transform(&synthesize_spectral(spec, grid)?))
}

/// Spectral form of [`synthesize_holder_field`].
pub fn synthesize_spectral(spec: &SynthesisSpec, grid: Grid) -> Result<SpectralField> {
    grid.require_periodic("synthesize_holder_field")?;
    let nyquist = (*grid.dims.iter().min().unwrap() / 2) as f64;
    spec.validate(nyquist)?;
    let n = grid.len();
    let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exponent = spec.target_alpha + 1.5;
    let active = random_phase_coefficients(
        grid.dims,
        3,
        spec.k_min,
        spec.k_max,
        |mag| mag.powf(-exponent),
        &mut rng,
        &mut comps,
    );
    if active == 0 {
        return Err(Error::invalid(format!(
            "band [{}, {}] contains no resolved modes on {:?}",
            spec.k_min, spec.k_max, grid.dims
        )));
    }
    let projected = leray_project(&SpectralField::new(grid, comps)?);
    let rms = (2.0 * projected.energy() / grid.lengths.iter().product::<f64>()).sqrt();
    if rms == 0.0 {
        return Err(Error::invalid("band carries no divergence-free content"));
    }
    let scale = vec![1.0 / rms; n];
    Ok(projected.apply_multiplier(&scale))
}

/// Random-phase field with a flat spectrum over all non-Nyquist modes
/// (white noise), projected to be divergence-free.
pub fn synthesize_white_noise(seed: u64, grid: Grid) -> Result<GridField> {
    grid.require_periodic("synthesize_white_noise")?;
    let n = grid.len();
    let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_phase_coefficients(grid.dims, 3, 1.0, f64::INFINITY, |_| 1.0, &mut rng, &mut comps);
    let projected = leray_project(&SpectralField::new(grid, comps)?);
    Ok(inverse_transform(&projected))
}

/// Band-limited random divergence-free field on `1 ≤ |m| ≤ k_max`, with
/// uniform phases and magnitudes drawn from `[0.25, 1.25)`.
pub fn random_band_limited(seed: u64, grid: Grid, k_max: f64) -> Result<GridField> {
    grid.require_periodic("random_band_limited")?;
    let n = grid.len();
    let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_phase_coefficients(
        grid.dims,
        3,
        1.0,
        k_max,
        |_| 1.0,
        &mut rng,
        &mut comps,
    );
    for c in comps.iter_mut() {
        let mut seen = vec![false; n];
        for idx in 0..n {
            if c[idx].norm() == 0.0 || seen[idx] {
                continue;
            }
            let s: f64 = 0.25 + rng.gen::<f64>();
            let conj = conj_index(idx, grid.dims);
            c[idx] *= s;
            if conj != idx {
                c[conj] *= s;
                seen[conj] = true;
            }
            seen[idx] = true;
        }
    }
    let projected = leray_project(&SpectralField::new(grid, comps)?);
    Ok(inverse_transform(&projected))
}

fn conj_index(idx: usize, dims: [usize; 3]) -> usize {
    let [n0, n1, n2] = dims;
    let i = idx % n0;
    let j = (idx / n0) % n1;
    let k = idx / (n0 * n1);
    let f = |i: usize, n: usize| (n - i) % n;
    f(i, n0) + n0 * (f(j, n1) + n1 * f(k, n2))
}
