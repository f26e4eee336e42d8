//! Uniform periodic lattice on `[-L, L)^N` and real fields sampled on it.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Periodic box `[-L, L)^N` with `n` nodes per axis.
///
/// Nodes sit at `x_j = -L + j·h`, `h = 2L/n`, so the origin is node `n/2`.
/// Frequencies are `ξ = (π/L)·k` with `k ∈ {-n/2, …, n/2-1}`; the index `-n/2`
/// is the unpaired Nyquist mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidResolution(points_per_axis));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self {
            dim,
            n: points_per_axis,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Lattice step in frequency space, `π/L`.
    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume of one cell, `h^N`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis frequencies in ascending order, `(π/L)·k` for `k = -n/2 … n/2-1`.
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half)
            .map(|k| k as f64 * self.frequency_step())
            .collect()
    }

    /// Integer wavenumber of position `i` in transform (FFT) ordering.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Index of the node at the origin along each axis.
    pub fn origin_node(&self) -> usize {
        self.n / 2
    }

    /// Per-axis node indices of a flat index (axis 0 slowest).
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    pub fn flatten(&self, nodes: [usize; 2]) -> usize {
        match self.dim {
            1 => nodes[0],
            _ => nodes[0] * self.n + nodes[1],
        }
    }

    /// Coordinates of a flat node index; only the first `dim` entries are meaningful.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(idx);
        match self.dim {
            1 => [self.axis_coord(a), 0.0],
            _ => [self.axis_coord(a), self.axis_coord(b)],
        }
    }

    /// Flat index of the node closest to `x` (periodically wrapped).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let mut nodes = [0usize; 2];
        for (axis, node) in nodes.iter_mut().enumerate().take(self.dim) {
            let j = ((x[axis] + self.half_width) / h).round() as i64;
            *node = j.rem_euclid(self.n as i64) as usize;
        }
        self.flatten(nodes)
    }

    /// Periodic displacement `x - y` wrapped into `[-L, L)` per axis.
    pub fn wrapped_delta(&self, x: f64, y: f64) -> f64 {
        let period = 2.0 * self.half_width;
        let d = x - y;
        d - period * ((d + self.half_width) / period).floor()
    }

    pub fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}D grid n={} on [-{}, {})",
            self.dim, self.n, self.half_width, self.half_width
        )
    }
}

/// Real samples of a function on a [`Grid`], row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field construction"));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.node_count()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.node_count()])
    }

    /// Samples `f` at every node. `f` receives a slice of length `dim`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.node_count())
            .map(|i| f(&grid.coords(i)[..dim]))
            .collect();
        Self::from_parts(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn ensure_same_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: other.describe(),
                found: self.grid.describe(),
            })
        }
    }

    /// Riemann sum `h^N Σ u`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_measure() * self.values.iter().sum::<f64>()
    }

    /// L² inner product as a Riemann sum.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_measure()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `(∫|u|^q)^{1/q}`.
    pub fn lp_norm(&self, q: f64) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(q)).sum();
        (self.grid.cell_measure() * sum).powf(1.0 / q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += a·x`
    pub fn axpy(&mut self, a: f64, x: &Field) {
        debug_assert_eq!(self.grid, x.grid);
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    /// Periodic shift by whole nodes: `out[j] = u[j - shift]`, so a bump at
    /// node `m` moves to node `m + shift`.
    pub fn roll(&self, shift: &[isize]) -> Field {
        let n = self.grid.points_per_axis() as isize;
        let mut out = vec![0.0; self.values.len()];
        match self.grid.dim() {
            1 => {
                for (j, o) in out.iter_mut().enumerate() {
                    let src = (j as isize - shift[0]).rem_euclid(n) as usize;
                    *o = self.values[src];
                }
            }
            _ => {
                for a in 0..n {
                    let sa = (a - shift[0]).rem_euclid(n);
                    for b in 0..n {
                        let sb = (b - shift[1]).rem_euclid(n);
                        out[(a * n + b) as usize] = self.values[(sa * n + sb) as usize];
                    }
                }
            }
        }
        Self::from_parts(self.grid, out)
    }

    /// Reflection through the origin node, `u(x) ↦ u(-x)`.
    pub fn reflect(&self) -> Field {
        let n = self.grid.points_per_axis();
        let mirror = |j: usize| (n - j) % n;
        let mut out = vec![0.0; self.values.len()];
        match self.grid.dim() {
            1 => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.values[mirror(j)];
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b] = self.values[mirror(a) * n + mirror(b)];
                    }
                }
            }
        }
        Self::from_parts(self.grid, out)
    }

    /// Average over the point symmetry group of the lattice about the origin
    /// node: `{±x}` in 1D, the eight symmetries of the square in 2D.
    pub fn symmetrize(&self) -> Field {
        let n = self.grid.points_per_axis();
        let mirror = |j: usize| (n - j) % n;
        match self.grid.dim() {
            1 => {
                let vals = (0..n)
                    .map(|j| 0.5 * (self.values[j] + self.values[mirror(j)]))
                    .collect();
                Self::from_parts(self.grid, vals)
            }
            _ => {
                let at = |a: usize, b: usize| self.values[a * n + b];
                let mut vals = vec![0.0; self.values.len()];
                for a in 0..n {
                    let ma = mirror(a);
                    for b in 0..n {
                        let mb = mirror(b);
                        let s = at(a, b)
                            + at(ma, b)
                            + at(a, mb)
                            + at(ma, mb)
                            + at(b, a)
                            + at(mb, a)
                            + at(b, ma)
                            + at(mb, ma);
                        vals[a * n + b] = s / 8.0;
                    }
                }
                Self::from_parts(self.grid, vals)
            }
        }
    }

    /// Periodic multilinear interpolation at an arbitrary point.
    pub fn interpolate_linear(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.points_per_axis() as i64;
        let h = g.spacing();
        let locate = |xa: f64| {
            let t = (xa + g.half_width()) / h;
            let j = t.floor();
            let frac = t - j;
            ((j as i64).rem_euclid(n) as usize, frac)
        };
        match g.dim() {
            1 => {
                let (j, f) = locate(x[0]);
                let j1 = (j + 1) % n as usize;
                (1.0 - f) * self.values[j] + f * self.values[j1]
            }
            _ => {
                let (a, fa) = locate(x[0]);
                let (b, fb) = locate(x[1]);
                let nn = n as usize;
                let a1 = (a + 1) % nn;
                let b1 = (b + 1) % nn;
                let v = |i: usize, k: usize| self.values[i * nn + k];
                (1.0 - fa) * ((1.0 - fb) * v(a, b) + fb * v(a, b1))
                    + fa * ((1.0 - fb) * v(a1, b) + fb * v(a1, b1))
            }
        }
    }

    /// Periodic tensor-product cubic (Catmull–Rom) interpolation.
    pub fn interpolate_cubic(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.points_per_axis() as i64;
        let h = g.spacing();
        let weights = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            [
                0.5 * (-t3 + 2.0 * t2 - t),
                0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                0.5 * (t3 - t2),
            ]
        };
        let locate = |xa: f64| {
            let t = (xa + g.half_width()) / h;
            let j = t.floor();
            (j as i64, t - j)
        };
        let wrap = |j: i64| j.rem_euclid(n) as usize;
        match g.dim() {
            1 => {
                let (j, f) = locate(x[0]);
                let w = weights(f);
                (0..4)
                    .map(|m| w[m] * self.values[wrap(j - 1 + m as i64)])
                    .sum()
            }
            _ => {
                let (a, fa) = locate(x[0]);
                let (b, fb) = locate(x[1]);
                let wa = weights(fa);
                let wb = weights(fb);
                let nn = n as usize;
                let mut acc = 0.0;
                for (ma, wam) in wa.iter().enumerate() {
                    let row = wrap(a - 1 + ma as i64) * nn;
                    for (mb, wbm) in wb.iter().enumerate() {
                        acc += wam * wbm * self.values[row + wrap(b - 1 + mb as i64)];
                    }
                }
                acc
            }
        }
    }
}
