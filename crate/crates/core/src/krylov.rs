//! Preconditioned MINRES for symmetric, possibly indefinite systems.
//!
//! Follows the Paige–Saunders recurrence with a symmetric positive definite
//! preconditioner `M ≈ A⁻¹`. Operators act on plain coefficient vectors with
//! the Euclidean inner product.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MinresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖`, recomputed from the returned solution.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0` until the preconditioned residual estimate
/// falls below `rtol` relative to its initial value, or `max_iter` steps.
pub fn minres<A, M>(apply_a: A, apply_m: M, b: &[f64], rtol: f64, max_iter: usize) -> Result<MinresOutcome>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    M: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(MinresOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }

    let mut r1 = b.to_vec();
    let mut y = apply_m(b)?;
    let beta1_sq = dot(b, &y);
    if !(beta1_sq > 0.0) {
        return Err(Error::InvalidParameter(
            "MINRES preconditioner is not positive definite".to_string(),
        ));
    }
    let beta1 = beta1_sq.sqrt();

    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut iterations = 0;
    let mut estimate_met = false;

    while iterations < max_iter {
        iterations += 1;
        let inv = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| t * inv).collect();
        y = apply_a(&v)?;
        if iterations >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        r1 = std::mem::replace(&mut r2, y);
        y = apply_m(&r2)?;
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::InvalidParameter(
                "MINRES preconditioner is not positive definite".to_string(),
            ));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) * denom)
            .collect();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += phi * wi;
        }

        if phibar <= rtol * beta1 || beta == 0.0 {
            estimate_met = true;
            break;
        }
    }

    let ax = apply_a(&x)?;
    let resid: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let relative_residual = norm(&resid) / bnorm;
    Ok(MinresOutcome {
        solution: x,
        iterations,
        relative_residual,
        converged: estimate_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(d: f64, o: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
        move |v: &[f64]| {
            let n = v.len();
            Ok((0..n)
                .map(|i| {
                    let mut s = d * v[i];
                    if i > 0 {
                        s += o * v[i - 1];
                    }
                    if i + 1 < n {
                        s += o * v[i + 1];
                    }
                    s
                })
                .collect())
        }
    }

    #[test]
    fn solves_indefinite_tridiagonal() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin() + 0.1).collect();
        let a = tridiag(0.5, 1.0);
        let out = minres(&a, |v: &[f64]| Ok(v.to_vec()), &b, 1e-12, 500).unwrap();
        assert!(out.converged);
        assert!(out.relative_residual < 1e-9, "{}", out.relative_residual);
    }

    #[test]
    fn diagonal_preconditioner_helps() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let d2 = diag.clone();
        let a = move |v: &[f64]| Ok(v.iter().zip(&d2).map(|(x, d)| x * d).collect());
        let m = |v: &[f64]| Ok(v.iter().zip(&diag).map(|(x, d)| x / d).collect());
        let b = vec![1.0; n];
        let out = minres(a, m, &b, 1e-10, 10).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = minres(tridiag(2.0, 1.0), |v: &[f64]| Ok(v.to_vec()), &[0.0; 4], 1e-8, 10).unwrap();
        assert!(out.solution.iter().all(|&x| x == 0.0));
        assert_eq!(out.iterations, 0);
    }
}
