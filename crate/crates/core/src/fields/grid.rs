use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary structure of a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Periodic in all three directions.
    Periodic3,
    /// Periodic in `x1, x2`; walls at `x3 = 0` and `x3 = L3`.
    Channel,
}

impl Geometry {
    pub fn tag(self) -> u32 {
        match self {
            Geometry::Periodic3 => 0,
            Geometry::Channel => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Geometry::Periodic3),
            1 => Some(Geometry::Channel),
            _ => None,
        }
    }
}

/// Lattice description shared by every field on it.
///
/// Periodic axes hold `N` samples at `x = i L / N`. The vertical axis of a
/// channel holds `N3` nodes at `x3 = k L3 / (N3 - 1)`, the first and last
/// being the walls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
    pub geometry: Geometry,
}

impl Grid {
    pub fn periodic(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, [2.0 * PI; 3], Geometry::Periodic3)
    }

    pub fn channel(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        Self::new(dims, lengths, Geometry::Channel)
    }

    pub fn new(dims: [usize; 3], lengths: [f64; 3], geometry: Geometry) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!("lattice dims must be positive, got {dims:?}")));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::invalid(format!("domain lengths must be positive, got {lengths:?}")));
        }
        if geometry == Geometry::Channel && dims[2] < 5 {
            return Err(Error::invalid(
                "channel needs at least 5 vertical nodes for the fourth-order stencils",
            ));
        }
        Ok(Grid {
            dims,
            lengths,
            geometry,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn spacing(&self) -> [f64; 3] {
        let mut h = [0.0; 3];
        for a in 0..3 {
            h[a] = self.lengths[a] / self.dims[a] as f64;
        }
        if self.geometry == Geometry::Channel {
            h[2] = self.lengths[2] / (self.dims[2] - 1) as f64;
        }
        h
    }

    pub fn coords(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]]
    }

    /// Quadrature weight of vertical node `k` (1 for periodic, trapezoid for channel).
    #[inline]
    pub(crate) fn vertical_weight(&self, k: usize) -> f64 {
        match self.geometry {
            Geometry::Periodic3 => 1.0,
            Geometry::Channel if k == 0 || k + 1 == self.dims[2] => 0.5,
            Geometry::Channel => 1.0,
        }
    }

    /// Volume element of the uniform-weight rule (before vertical trapezoid weights).
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Wavenumber of the highest resolved mode along each periodic axis.
    pub fn nyquist_wavenumbers(&self) -> [f64; 3] {
        let mut k = [0.0; 3];
        for a in 0..3 {
            k[a] = 2.0 * PI / self.lengths[a] * (self.dims[a] / 2) as f64;
        }
        k
    }

    pub(crate) fn require_periodic(&self, what: &str) -> Result<()> {
        if self.geometry != Geometry::Periodic3 {
            return Err(Error::invalid(format!("{what} requires a periodic3 field")));
        }
        Ok(())
    }
}

/// Sampled three-component velocity field.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl GridField {
    pub fn new(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        let n = grid.len();
        if comps.iter().any(|c| c.len() != n) {
            return Err(Error::invalid(format!(
                "component lengths {:?} do not match lattice size {n}",
                comps.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if comps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite samples"));
        }
        let field = GridField { grid, comps };
        if grid.geometry == Geometry::Channel {
            let wall = field.wall_max();
            if wall != 0.0 {
                return Err(Error::invalid(format!(
                    "channel field must vanish on the walls, found |v| = {wall:e}"
                )));
            }
        }
        Ok(field)
    }

    /// Wraps component arrays without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(grid: Grid, comps: [Vec<f64>; 3]) -> Self {
        debug_assert!(comps.iter().all(|c| c.len() == grid.len()));
        GridField { grid, comps }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        GridField {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Samples `f` at every node. Channel wall nodes are forced to zero.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        let [n0, n1, n2] = grid.dims;
        for k in 0..n2 {
            let wall = grid.geometry == Geometry::Channel && (k == 0 || k + 1 == n2);
            for j in 0..n1 {
                for i in 0..n0 {
                    if wall {
                        continue;
                    }
                    let v = f(grid.coords(i, j, k));
                    let idx = grid.index(i, j, k);
                    for c in 0..3 {
                        out.comps[c][idx] = v[c];
                    }
                }
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    #[inline]
    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| norm3(self.at(i)))
            .fold(0.0, f64::max)
    }

    /// Largest `|v|` on the channel walls (zero for periodic fields).
    pub fn wall_max(&self) -> f64 {
        if self.grid.geometry != Geometry::Channel {
            return 0.0;
        }
        let plane = self.grid.dims[0] * self.grid.dims[1];
        let top = self.grid.len() - plane;
        self.comps
            .iter()
            .flat_map(|c| c[..plane].iter().chain(&c[top..]))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Spatial mean of each component (uniform weights on periodic lattices).
    pub fn mean(&self) -> [f64; 3] {
        let n = self.grid.len() as f64;
        let mut m = [0.0; 3];
        for c in 0..3 {
            m[c] = crate::stats::det_sum(&self.comps[c]) / n;
        }
        m
    }

    /// `self - other`, componentwise.
    pub fn sub(&self, other: &GridField) -> GridField {
        assert_eq!(self.grid.dims, other.grid.dims, "lattice mismatch");
        let comps = std::array::from_fn(|c| {
            self.comps[c]
                .iter()
                .zip(&other.comps[c])
                .map(|(a, b)| a - b)
                .collect()
        });
        GridField::from_parts(self.grid, comps)
    }

    pub fn scale(&self, s: f64) -> GridField {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|v| v * s).collect());
        GridField::from_parts(self.grid, comps)
    }

    /// Adds the constant vector `u` to every node.
    pub fn add_constant(&self, u: [f64; 3]) -> GridField {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|v| v + u[c]).collect());
        GridField::from_parts(self.grid, comps)
    }

    /// Returns the field with its mean removed.
    pub fn remove_mean(&self) -> GridField {
        let m = self.mean();
        self.add_constant([-m[0], -m[1], -m[2]])
    }

    /// Integer lattice roll: `out(x) = self(x - shift)` for periodic axes.
    pub fn roll(&self, shift: [i64; 3]) -> GridField {
        let [n0, n1, n2] = self.grid.dims;
        let wrap = |i: usize, s: i64, n: usize| -> usize { (i as i64 - s).rem_euclid(n as i64) as usize };
        let mut out = GridField::zeros(self.grid);
        for k in 0..n2 {
            let sk = wrap(k, shift[2], n2);
            for j in 0..n1 {
                let sj = wrap(j, shift[1], n1);
                for i in 0..n0 {
                    let si = wrap(i, shift[0], n0);
                    let dst = self.grid.index(i, j, k);
                    let src = self.grid.index(si, sj, sk);
                    for c in 0..3 {
                        out.comps[c][dst] = self.comps[c][src];
                    }
                }
            }
        }
        out
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest componentwise absolute value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Kinetic energy `½‖v‖²` by the uniform (trapezoid) rule.
pub fn energy(f: &GridField) -> f64 {
    0.5 * l2_norm_sq(f)
}

/// `‖v‖²` by the uniform (trapezoid) rule.
pub fn l2_norm_sq(f: &GridField) -> f64 {
    let grid = f.grid();
    let plane = grid.dims[0] * grid.dims[1];
    let per_plane: Vec<f64> = (0..grid.dims[2])
        .map(|k| {
            let mut s = 0.0;
            for c in 0..3 {
                s += f.comps[c][k * plane..(k + 1) * plane]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>();
            }
            s * grid.vertical_weight(k)
        })
        .collect();
    per_plane.iter().sum::<f64>() * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Grid::periodic([0, 4, 4]).is_err());
        assert!(Grid::channel([8, 8, 4], [1.0; 3]).is_err());
        let g = Grid::periodic([2, 2, 2]).unwrap();
        assert!(GridField::new(g, [vec![0.0; 8], vec![0.0; 8], vec![0.0; 7]]).is_err());
        let mut bad = vec![0.0; 8];
        bad[3] = f64::NAN;
        assert!(GridField::new(g, [bad, vec![0.0; 8], vec![0.0; 8]]).is_err());
    }

    #[test]
    fn channel_walls_must_vanish() {
        let g = Grid::channel([4, 4, 5], [1.0; 3]).unwrap();
        let mut c = vec![0.0; g.len()];
        c[g.index(1, 1, 4)] = 1e-300;
        assert!(GridField::new(g, [c, vec![0.0; g.len()], vec![0.0; g.len()]]).is_err());
        let f = GridField::from_fn(g, |_| [1.0, 2.0, 3.0]);
        assert_eq!(f.wall_max(), 0.0);
        assert!(GridField::new(g, f.clone().into_components()).is_ok());
    }

    #[test]
    fn roll_moves_samples() {
        let g = Grid::periodic([4, 3, 2]).unwrap();
        let f = GridField::from_fn(g, |x| [x[0], x[1], x[2]]);
        let r = f.roll([1, 0, 0]);
        let h = g.spacing();
        assert!((r.component(0)[g.index(1, 0, 0)] - 0.0).abs() < 1e-15);
        assert!((r.component(0)[g.index(0, 0, 0)] - 3.0 * h[0]).abs() < 1e-15);
    }
}
