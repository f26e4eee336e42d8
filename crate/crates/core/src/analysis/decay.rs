//! Algebraic tail exponent from radially binned samples.

use crate::analysis::maximizer::locate_maximizer;
use crate::error::{Error, Result};
use crate::grid::Field;

pub const DEFAULT_BINS: usize = 16;
pub const MIN_BINS: usize = 8;
/// Fits with `r²` below this are not treated as power laws.
pub const POWER_LAW_R2: f64 = 0.995;

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of `log u` against `log r`.
    pub slope: f64,
    /// Coefficient of determination of the fit.
    pub r2_stat: f64,
    pub bins: usize,
    pub power_law: bool,
    pub radii: Vec<f64>,
    pub means: Vec<f64>,
}

/// `[0.3L, 0.7L]`.
pub fn default_window(half_width: f64) -> (f64, f64) {
    (0.3 * half_width, 0.7 * half_width)
}

/// Fits `u ~ r^slope` on `r ∈ [r1, r2]`, `r` the wrapped distance to the
/// maximizer, using [`DEFAULT_BINS`] logarithmically spaced bins.
pub fn decay_fit(u: &Field, window: (f64, f64)) -> Result<DecayFit> {
    let g = *u.grid();
    let (r1, r2) = window;
    let l = g.half_width();
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Diagnostic(format!(
            "decay window must satisfy 0 < r1 < r2, got [{r1}, {r2}]"
        )));
    }
    if r2 > 0.8 * l {
        return Err(Error::Diagnostic(format!(
            "decay window end {r2} exceeds 0.8·L = {}",
            0.8 * l
        )));
    }
    let centre = locate_maximizer(u)?.point;
    let dim = g.dim();
    let ratio = (r2 / r1).ln();
    let mut sum_r = vec![0.0; DEFAULT_BINS];
    let mut sum_u = vec![0.0; DEFAULT_BINS];
    let mut count = vec![0usize; DEFAULT_BINS];
    for (i, &v) in u.values().iter().enumerate() {
        let x = g.coords(i);
        let r = (0..dim)
            .map(|a| g.wrapped_delta(x[a], centre[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        if r < r1 || r > r2 {
            continue;
        }
        if v <= 0.0 {
            return Err(Error::Diagnostic(format!(
                "non-positive value {v:e} at r = {r:.4} inside the decay window"
            )));
        }
        let b = (((r / r1).ln() / ratio) * DEFAULT_BINS as f64) as usize;
        let b = b.min(DEFAULT_BINS - 1);
        sum_r[b] += r;
        sum_u[b] += v;
        count[b] += 1;
    }
    let (radii, means): (Vec<f64>, Vec<f64>) = (0..DEFAULT_BINS)
        .filter(|&b| count[b] > 0)
        .map(|b| (sum_r[b] / count[b] as f64, sum_u[b] / count[b] as f64))
        .unzip();
    if radii.len() < MIN_BINS {
        return Err(Error::Diagnostic(format!(
            "decay window holds {} non-empty bins, need at least {MIN_BINS}",
            radii.len()
        )));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let r2_stat = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit {
        slope,
        r2_stat,
        bins: radii.len(),
        power_law: r2_stat >= POWER_LAW_R2,
        radii,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn recovers_exact_power_law() {
        let g = Grid::new(1, 4096, 64.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0].abs().powi(2)));
        let fit = decay_fit(&u, (10.0, 45.0)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-2, "{}", fit.slope);
        assert!(fit.power_law);
    }

    #[test]
    fn gaussian_is_not_a_power_law() {
        let g = Grid::new(1, 1024, 16.0).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let fit = decay_fit(&u, (1.0, 5.0)).unwrap();
        assert!(fit.slope < -4.0);
        assert!(!fit.power_law, "r2 = {}", fit.r2_stat);
    }

    #[test]
    fn window_preconditions() {
        let g = Grid::new(1, 64, 16.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0] * x[0]));
        assert!(decay_fit(&u, (2.0, 13.0)).is_err());
        assert!(decay_fit(&u, (5.0, 5.5)).is_err());
        let neg = Field::from_fn(g, |x| if x[0].abs() > 4.0 { -1e-3 } else { 1.0 });
        assert!(decay_fit(&neg, (5.0, 12.0)).is_err());
    }
}
