//! Multi-dimensional complex FFTs over x-fastest lattices.
//!
//! Transforms are unnormalized in both directions; callers own the `1/N`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let forward = dir == Direction::Forward;
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((len, forward))
        .or_insert_with(|| {
            let direction = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

fn axis0(data: &mut [Complex64], n0: usize, dir: Direction) {
    if n0 == 1 {
        return;
    }
    let fft = plan(n0, dir);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n0 * 64)
        .for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, lines| fft.process_with_scratch(lines, scratch),
        );
}

fn axis1(data: &mut [Complex64], n0: usize, n1: usize, dir: Direction) {
    if n1 == 1 {
        return;
    }
    let fft = plan(n1, dir);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n0 * n1).for_each_init(
        || {
            (
                vec![Complex64::default(); n0 * n1],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(buf, scratch), plane| {
            // transpose so every x-column becomes contiguous
            for j in 0..n1 {
                for i in 0..n0 {
                    buf[i * n1 + j] = plane[j * n0 + i];
                }
            }
            fft.process_with_scratch(buf, scratch);
            for j in 0..n1 {
                for i in 0..n0 {
                    plane[j * n0 + i] = buf[i * n1 + j];
                }
            }
        },
    );
}

fn axis2(data: &mut [Complex64], n01: usize, n2: usize, dir: Direction) {
    if n2 == 1 {
        return;
    }
    let fft = plan(n2, dir);
    let scratch_len = fft.get_inplace_scratch_len();
    let mut columns = vec![Complex64::default(); data.len()];
    {
        let src: &[Complex64] = data;
        columns.par_chunks_mut(n2).enumerate().for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, (p, col)| {
                for (k, c) in col.iter_mut().enumerate() {
                    *c = src[k * n01 + p];
                }
                fft.process_with_scratch(col, scratch);
            },
        );
    }
    data.par_chunks_mut(n01).enumerate().for_each(|(k, plane)| {
        for (p, v) in plane.iter_mut().enumerate() {
            *v = columns[p * n2 + k];
        }
    });
}

/// Full 3-D transform.
pub(crate) fn fft3(data: &mut [Complex64], dims: [usize; 3], dir: Direction) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    axis0(data, dims[0], dir);
    axis1(data, dims[0], dims[1], dir);
    axis2(data, dims[0] * dims[1], dims[2], dir);
}

/// 2-D transform of every constant-`x3` plane.
pub(crate) fn fft2_planes(data: &mut [Complex64], dims: [usize; 3], dir: Direction) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    axis0(data, dims[0], dir);
    axis1(data, dims[0], dims[1], dir);
}

/// Signed integer mode for FFT index `idx` on an axis of length `n`.
/// For even `n` the Nyquist index maps to `-n/2`.
#[inline]
pub(crate) fn mode(idx: usize, n: usize) -> i64 {
    if idx < n.div_ceil(2) {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

#[inline]
pub(crate) fn is_nyquist(idx: usize, n: usize) -> bool {
    n % 2 == 0 && n > 1 && idx == n / 2
}

/// FFT index holding signed mode `m` on an axis of length `n`, if representable.
#[inline]
pub(crate) fn index_of(m: i64, n: usize) -> Option<usize> {
    let n_i = n as i64;
    let lo = -(n_i / 2);
    let hi = (n_i - 1) / 2;
    if m < lo || m > hi {
        return None;
    }
    Some(if m >= 0 { m as usize } else { (m + n_i) as usize })
}

/// Copies the coefficients of a field on `dims` into a zeroed array on the
/// larger lattice `padded`, dropping Nyquist planes of the source. Axes with
/// `fourier[a] == false` are physical and copied index for index.
pub(crate) fn pad(
    coeffs: &[Complex64],
    dims: [usize; 3],
    padded: [usize; 3],
    fourier: [bool; 3],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); padded.iter().product()];
    let maps: Vec<Vec<Option<usize>>> = (0..3)
        .map(|a| {
            (0..dims[a])
                .map(|i| {
                    if !fourier[a] {
                        debug_assert_eq!(dims[a], padded[a]);
                        Some(i)
                    } else if is_nyquist(i, dims[a]) {
                        None
                    } else {
                        index_of(mode(i, dims[a]), padded[a])
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..dims[2] {
        let Some(pk) = maps[2][k] else { continue };
        for j in 0..dims[1] {
            let Some(pj) = maps[1][j] else { continue };
            for i in 0..dims[0] {
                let Some(pi) = maps[0][i] else { continue };
                out[pi + padded[0] * (pj + padded[1] * pk)] = coeffs[i + dims[0] * (j + dims[1] * k)];
            }
        }
    }
    out
}
