//! Discrete Fourier machinery on a [`Grid`]: forward/inverse transforms,
//! Fourier multipliers, spectral derivatives, sub-grid shifts and evaluation
//! of the trigonometric interpolant.
//!
//! Coefficients are stored in transform order along each axis (index `i`
//! carries wavenumber [`Grid::wavenumber`]`(i)`). The forward transform is
//! unnormalized; the inverse carries the `1/n^N` factor, so the Riemann-sum
//! Parseval identity reads `h^N Σ|u|² = (h^N / n^N) Σ|û|²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, Grid};

#[derive(Clone)]
pub struct SpectralTransform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_axis();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.grid.points_per_axis();
        match self.grid.dim() {
            1 => plan.process(buf),
            _ => {
                // rows are contiguous
                for row in buf.chunks_exact_mut(n) {
                    plan.process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for b in 0..n {
                    for a in 0..n {
                        col[a] = buf[a * n + b];
                    }
                    plan.process(&mut col);
                    for a in 0..n {
                        buf[a * n + b] = col[a];
                    }
                }
            }
        }
    }

    pub fn forward_values(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&self.forward, &mut buf);
        buf
    }

    pub fn forward(&self, u: &Field) -> Vec<Complex64> {
        self.forward_values(u.values())
    }

    /// Inverse transform (normalized) in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.run(&self.inverse, buf);
        let scale = 1.0 / self.grid.node_count() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform returning the real part and the relative imaginary
    /// leakage `max|Im| / max(max|Re|, tiny)`.
    pub fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.inverse_in_place(&mut coeffs);
        let mut max_re = 0.0f64;
        let mut max_im = 0.0f64;
        let re = coeffs
            .iter()
            .map(|c| {
                max_re = max_re.max(c.re.abs());
                max_im = max_im.max(c.im.abs());
                c.re
            })
            .collect();
        (re, max_im / max_re.max(f64::MIN_POSITIVE))
    }

    /// Wavevector `ξ` of a flat coefficient index; unused components are zero.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let g = &self.grid;
        let [a, b] = g.unflatten(idx);
        let dk = g.frequency_step();
        match g.dim() {
            1 => [g.wavenumber(a) as f64 * dk, 0.0],
            _ => [g.wavenumber(a) as f64 * dk, g.wavenumber(b) as f64 * dk],
        }
    }

    /// `|ξ|²` for every coefficient, transform order.
    pub fn wavevector_norm_sq(&self) -> Vec<f64> {
        (0..self.grid.node_count())
            .map(|i| {
                let k = self.wavevector(i);
                k[0] * k[0] + k[1] * k[1]
            })
            .collect()
    }

    /// Whether the coefficient has the unpaired `-n/2` index along `axis`.
    pub fn is_nyquist_along(&self, idx: usize, axis: usize) -> bool {
        self.grid.is_nyquist(self.grid.unflatten(idx)[axis])
    }

    /// Whether the coefficient has the unpaired index along any axis.
    pub fn is_unpaired(&self, idx: usize) -> bool {
        (0..self.grid.dim()).any(|axis| self.is_nyquist_along(idx, axis))
    }

    /// Flat index of the coefficient at `-ξ`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.grid.points_per_axis();
        let [a, b] = self.grid.unflatten(idx);
        self.grid.flatten([(n - a) % n, (n - b) % n])
    }

    /// Applies a real multiplier `m[idx]` (transform order) to `u`.
    pub fn apply_real_multiplier(&self, u: &Field, m: &[f64]) -> (Field, f64) {
        let mut coeffs = self.forward(u);
        for (c, &w) in coeffs.iter_mut().zip(m) {
            *c *= w;
        }
        let (vals, leak) = self.inverse_real(coeffs);
        (Field::from_parts(self.grid, vals), leak)
    }

    /// Spectral partial derivative `∂_axis u`; the Nyquist mode along `axis`
    /// is dropped so the result stays real.
    pub fn derivative(&self, u: &Field, axis: usize) -> Field {
        let mut coeffs = self.forward(u);
        for (idx, c) in coeffs.iter_mut().enumerate() {
            if self.is_nyquist_along(idx, axis) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                let xi = self.wavevector(idx)[axis];
                *c *= Complex64::new(0.0, xi);
            }
        }
        let (vals, _) = self.inverse_real(coeffs);
        Field::from_parts(self.grid, vals)
    }

    /// Band-limited translation `x ↦ u(x - a)`. Nyquist modes are treated as
    /// cosines so the output stays real.
    pub fn shift(&self, u: &Field, a: &[f64]) -> Field {
        let mut coeffs = self.forward(u);
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = self.wavevector(idx);
            let mut phase = 0.0;
            let mut damp = 1.0;
            for axis in 0..self.grid.dim() {
                if self.is_nyquist_along(idx, axis) {
                    damp *= (k[axis] * a[axis]).cos();
                } else {
                    phase -= k[axis] * a[axis];
                }
            }
            *c *= Complex64::from_polar(damp, phase);
        }
        let (vals, _) = self.inverse_real(coeffs);
        Field::from_parts(self.grid, vals)
    }

    /// Value, gradient and Hessian of the trigonometric interpolant of `u`
    /// (given by its coefficients) at an arbitrary point.
    pub fn interpolant_jet(&self, coeffs: &[Complex64], x: &[f64]) -> InterpolantJet {
        let g = &self.grid;
        let dim = g.dim();
        let scale = 1.0 / g.node_count() as f64;
        let mut jet = InterpolantJet::default();
        for (idx, c) in coeffs.iter().enumerate() {
            let k = self.wavevector(idx);
            let mut arg = 0.0;
            for axis in 0..dim {
                arg += k[axis] * (x[axis] + g.half_width());
            }
            let nyq = self.is_unpaired(idx);
            // Nyquist modes contribute their cosine part only.
            let e = if nyq {
                Complex64::new(arg.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, arg)
            };
            let ce = c * e;
            jet.value += scale * ce.re;
            if nyq {
                continue;
            }
            for i in 0..dim {
                // d/dx_i e^{i k·x} = i k_i e^{i k·x}
                jet.gradient[i] += scale * (ce * Complex64::new(0.0, k[i])).re;
                for j in 0..dim {
                    jet.hessian[i][j] -= scale * k[i] * k[j] * ce.re;
                }
            }
        }
        jet
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct InterpolantJet {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}
