//! Real-space evaluation of the fractional Laplacian from its singular
//! second-difference integral
//!
//! ```text
//! (-Δ)^s u(x) = c · ∫_R (2u(x) - u(x+y) - u(x-y)) / |y|^{1+2s} dy
//! ```
//!
//! in one dimension. This path never touches the Fourier transform and serves
//! as an oracle for [`FracLapOperator`](crate::operator::FracLapOperator).
//!
//! The integral is split into three pieces, using the `y ↦ -y` symmetry to
//! integrate over `y > 0` only:
//!
//! * `0 < y < δ`: second-order Taylor model `2u(x) - u(x+y) - u(x-y) ≈ -u''(x) y²`,
//!   integrated exactly against `y^{-1-2s}`, with `u''` from the central
//!   second difference;
//! * `δ ≤ y ≤ R`: composite trapezoid on lattice multiples `y = m·h`;
//! * `R < y ≤ Y`: the same trapezoid continued over a number of periods of the
//!   periodic extension;
//! * `y > Y`: `u(x±y)` replaced by the cell mean, integrated in closed form.
//!
//! Cutoffs are snapped to lattice multiples, so every sample `u(x ± m h)` is a
//! node value and linear interpolation reduces to a lookup.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{Field, Grid};
use crate::operator::FracLapOperator;

/// Number of box periods integrated explicitly beyond the outer cut.
pub const DEFAULT_FAR_PERIODS: usize = 16;

#[derive(Clone, Copy, Debug)]
pub struct QuadratureCuts {
    pub inner: f64,
    pub outer: f64,
    pub far_periods: usize,
}

impl QuadratureCuts {
    pub fn new(inner: f64, outer: f64) -> Self {
        Self {
            inner,
            outer,
            far_periods: DEFAULT_FAR_PERIODS,
        }
    }

    /// Inner cut one lattice step, outer cut the box half width.
    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.spacing(), grid.half_width())
    }
}

fn validate(u: &Field, s: f64, x: f64, cuts: &QuadratureCuts, cns: f64) -> Result<usize> {
    let g = u.grid();
    if g.dim() != 1 {
        return Err(Error::Quadrature(format!(
            "only N = 1 is supported by the quadrature oracle, got N = {}",
            g.dim()
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Quadrature(format!("s must lie in (0, 1), got {s}")));
    }
    if !(cuts.inner > 0.0 && cuts.inner < cuts.outer && cuts.outer <= g.half_width() + 1e-12) {
        return Err(Error::Quadrature(format!(
            "cutoffs must satisfy 0 < inner < outer <= L = {}, got inner = {}, outer = {}",
            g.half_width(),
            cuts.inner,
            cuts.outer
        )));
    }
    if !(cns > 0.0 && cns.is_finite()) {
        return Err(Error::Quadrature(format!("constant must be positive, got {cns}")));
    }
    let node = g.nearest_node(&[x]);
    if (g.axis_coord(node) - x).abs() > 1e-9 * g.spacing() {
        return Err(Error::Quadrature(format!("x = {x} is not a grid node")));
    }
    Ok(node)
}

/// Lattice form of the singular integral for an arbitrary sampler
/// `at(m) = u(x + m·h)` of a function on the line.
///
/// `m_in ≥ 1` and `m_far > m_in` bound the explicit trapezoid in lattice steps;
/// beyond `m_far·h` the symmetric average `(u(x+y) + u(x-y))/2` is replaced by
/// `tail_level`.
pub fn second_difference_quadrature(
    at: impl Fn(i64) -> f64,
    h: f64,
    s: f64,
    m_in: i64,
    m_far: i64,
    tail_level: f64,
    cns: f64,
) -> f64 {
    let kernel = |y: f64| y.powf(-1.0 - 2.0 * s);
    let u0 = at(0);

    let mut body = 0.0;
    for m in m_in..=m_far {
        let w = if m == m_in || m == m_far { 0.5 } else { 1.0 };
        body += w * (2.0 * u0 - at(m) - at(-m)) * kernel(m as f64 * h);
    }
    body *= h;

    // -u''(x)·∫_0^δ y^{1-2s} dy
    let delta = m_in as f64 * h;
    let second = (at(1) - 2.0 * u0 + at(-1)) / (h * h);
    let inner = -second * delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    let y_far = m_far as f64 * h;
    let tail = 2.0 * (u0 - tail_level) * y_far.powf(-2.0 * s) / (2.0 * s);

    cns * 2.0 * (body + inner + tail)
}

/// Evaluates `c·∫(2u(x) - u(x+y) - u(x-y))/|y|^{1+2s} dy` at the grid node `x`
/// for the periodic extension of `u`.
pub fn flap_quadrature(u: &Field, s: f64, x: f64, cuts: &QuadratureCuts, cns: f64) -> Result<f64> {
    let j0 = validate(u, s, x, cuts, cns)? as i64;
    let g = u.grid();
    let n = g.points_per_axis() as i64;
    let h = g.spacing();
    let vals = u.values();
    let m_in = ((cuts.inner / h).round() as i64).max(1);
    let m_out = ((cuts.outer / h).round() as i64).max(m_in + 1);
    let m_far = m_out + cuts.far_periods as i64 * n;
    let mean = vals.iter().sum::<f64>() / n as f64;
    Ok(second_difference_quadrature(
        |m| vals[(j0 + m).rem_euclid(n) as usize],
        h,
        s,
        m_in,
        m_far,
        mean,
        cns,
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct Calibration {
    pub constant: f64,
    /// `‖c·q - spectral‖ / ‖spectral‖` over the calibration nodes.
    pub relative_mismatch: f64,
}

/// Determines `c(1, s)` by least squares between the unit-constant quadrature
/// and the spectral operator on `cos(k₁x)`, `k₁` the lowest nonzero lattice
/// frequency, over all nodes.
pub fn calibrate_cns(s: f64, grid: &Grid, exec: Execution) -> Result<Calibration> {
    if grid.dim() != 1 {
        return Err(Error::Calibration(format!(
            "calibration is defined for N = 1 only, got N = {}",
            grid.dim()
        )));
    }
    let k1 = grid.frequency_step();
    let u = Field::from_fn(*grid, |x| (k1 * x[0]).cos());
    let op = FracLapOperator::new(*grid, s)?;
    let spectral = op.apply(&u)?;
    let cuts = QuadratureCuts::for_grid(grid);
    let quad: Vec<f64> = exec
        .map_range(grid.points_per_axis(), |j| {
            flap_quadrature(&u, s, grid.axis_coord(j), &cuts, 1.0)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let qq: f64 = quad.iter().map(|q| q * q).sum();
    let qs: f64 = quad.iter().zip(spectral.values()).map(|(q, v)| q * v).sum();
    let ss: f64 = spectral.values().iter().map(|v| v * v).sum();
    if !(qq.is_finite() && qs.is_finite()) || qq < 1e-300 || ss < 1e-300 {
        return Err(Error::Calibration(format!(
            "degenerate fit (Σq² = {qq:e}, Σq·s = {qs:e})"
        )));
    }
    let constant = qs / qq;
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::Calibration(format!("non-positive constant {constant}")));
    }
    let resid: f64 = quad
        .iter()
        .zip(spectral.values())
        .map(|(q, v)| (constant * q - v).powi(2))
        .sum();
    Ok(Calibration {
        constant,
        relative_mismatch: (resid / ss).sqrt(),
    })
}
