//! The fractional Laplacian `(-Δ)^s` as the Fourier multiplier `|ξ|^{2s}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::spectral::SpectralTransform;

/// Relative imaginary leakage above which an application is rejected.
pub const MAX_LEAKAGE: f64 = 1e-10;

/// `(-Δ)^s` on a periodic grid. Immutable after construction and `Sync`.
#[derive(Clone, Debug)]
pub struct FracLapOperator {
    s: f64,
    grid: Grid,
    symbol: Vec<f64>,
    transform: SpectralTransform,
}

impl FracLapOperator {
    /// Builds the operator for `s ∈ (0, 1]`. The unpaired Nyquist frequency is
    /// included with magnitude `|ξ|^{2s}`.
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fractional order s must lie in (0, 1], got {s}"
            )));
        }
        let transform = SpectralTransform::new(grid);
        let symbol = transform
            .wavevector_norm_sq()
            .into_iter()
            .map(|k2| if s == 1.0 { k2 } else { k2.powf(s) })
            .collect();
        Ok(Self {
            s,
            grid,
            symbol,
            transform,
        })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `|ξ|^{2s}` in transform order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    fn check(&self, u: &Field) -> Result<()> {
        u.ensure_same_grid(&self.grid)?;
        u.ensure_finite("fractional Laplacian input")
    }

    /// `(-Δ)^s u`.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let (out, leak) = self.transform.apply_real_multiplier(u, &self.symbol);
        if leak > MAX_LEAKAGE {
            return Err(Error::NonFinite("imaginary leakage in fractional Laplacian"));
        }
        out.ensure_finite("fractional Laplacian output")?;
        Ok(out)
    }

    /// `‖u‖²_{D^{s,2}} = ∫|ξ|^{2s}|û|² dξ`, evaluated so that it equals the
    /// Riemann sum of `u·(-Δ)^s u`.
    pub fn seminorm_sq(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let coeffs = self.transform.forward(u);
        Ok(self.seminorm_sq_from_coeffs(&coeffs))
    }

    pub(crate) fn seminorm_sq_from_coeffs(&self, coeffs: &[Complex64]) -> f64 {
        let sum: f64 = coeffs
            .iter()
            .zip(&self.symbol)
            .map(|(c, w)| w * c.norm_sqr())
            .sum();
        sum * self.grid.cell_measure() / self.grid.node_count() as f64
    }

    /// `⟨u, w⟩_{D^{s,2}}`.
    pub fn inner(&self, u: &Field, w: &Field) -> Result<f64> {
        self.check(u)?;
        self.check(w)?;
        let cu = self.transform.forward(u);
        let cw = self.transform.forward(w);
        let sum: f64 = cu
            .iter()
            .zip(&cw)
            .zip(&self.symbol)
            .map(|((a, b), m)| m * (a * b.conj()).re)
            .sum();
        Ok(sum * self.grid.cell_measure() / self.grid.node_count() as f64)
    }

    /// `‖u‖²_{H^s} = ‖u‖²_{L²} + ‖u‖²_{D^{s,2}}`.
    pub fn hs_norm_sq(&self, u: &Field) -> Result<f64> {
        Ok(u.l2_norm_sq() + self.seminorm_sq(u)?)
    }

    /// `((-Δ)^s + shift)^{-1} u` for `shift > 0`.
    pub fn resolvent(&self, u: &Field, shift: f64) -> Result<Field> {
        self.check(u)?;
        if !(shift > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "resolvent shift must be positive, got {shift}"
            )));
        }
        let m: Vec<f64> = self.symbol.iter().map(|w| 1.0 / (w + shift)).collect();
        Ok(self.transform.apply_real_multiplier(u, &m).0)
    }

    /// `|F((-Δ)^{s/2} u)(ξ)|²` per coefficient (transform order).
    pub fn half_power_spectrum(&self, u: &Field) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self
            .transform
            .forward(u)
            .iter()
            .zip(&self.symbol)
            .map(|(c, w)| w * c.norm_sqr())
            .collect())
    }

    pub fn derivative(&self, u: &Field, axis: usize) -> Result<Field> {
        self.check(u)?;
        Ok(self.transform.derivative(u, axis))
    }
}
