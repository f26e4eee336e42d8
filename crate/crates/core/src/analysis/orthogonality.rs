//! Orthogonality of a ground state and its partial derivatives.

use crate::error::Result;
use crate::grid::Field;
use crate::model::positive_power;
use crate::operator::FracLapOperator;

#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonality {
    /// Normalized Gram matrix of `{U, ∂₁U, …, ∂_N U}` in `⟨·,·⟩₀`.
    pub gram: Vec<Vec<f64>>,
    /// `∫U^p ∂_iU / (‖U^p‖_{L²} ‖∂_iU‖_{L²})`.
    pub nonlinear: Vec<f64>,
    pub max_offdiag: f64,
    pub max_nonlinear: f64,
}

/// Uses `⟨a, b⟩₀ = ⟨a, b⟩_D + λ⟨a, b⟩_{L²}`.
pub fn orthogonality_diagnostics(u: &Field, op: &FracLapOperator, lambda: f64, p: f64) -> Result<Orthogonality> {
    let dim = op.grid().dim();
    let mut basis = vec![u.clone()];
    for axis in 0..dim {
        basis.push(op.derivative(u, axis)?);
    }
    let inner0 = |a: &Field, b: &Field| -> Result<f64> { Ok(op.inner(a, b)? + lambda * a.dot(b)) };
    let k = basis.len();
    let mut raw = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            raw[i][j] = inner0(&basis[i], &basis[j])?;
            raw[j][i] = raw[i][j];
        }
    }
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| raw[i][j] / (raw[i][i] * raw[j][j]).sqrt()).collect())
        .collect();
    let up = u.map(|v| positive_power(v.max(0.0), p));
    let nonlinear: Vec<f64> = basis[1..]
        .iter()
        .map(|d| up.dot(d) / (up.l2_norm() * d.l2_norm()))
        .collect();
    let max_offdiag = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| gram[i][j].abs())
        .fold(0.0, f64::max);
    let max_nonlinear = nonlinear.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(Orthogonality {
        gram,
        nonlinear,
        max_offdiag,
        max_nonlinear,
    })
}
