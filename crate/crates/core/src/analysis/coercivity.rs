//! Sign checks of the second variation `J''_ε` at a ground state: positive
//! on the ε-orthogonal complement `W_ε` of `{U, ∂_iU}`, negative along `U`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::Field;
use crate::model::{Functional, ProblemParams};
use crate::operator::FracLapOperator;

/// Gram condition number above which the projection is refused.
pub const MAX_GRAM_CONDITION: f64 = 1e12;
pub const LOBPCG_ITERATIONS: usize = 50;
/// Relative residual at which the minimum estimate counts as converged.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

/// `{U, ∂₁U, …, ∂_N U}` with the images `A b_j` needed for ε-projections.
#[derive(Clone, Debug)]
pub struct ProjectionBasis {
    pub base: Field,
    pub derivatives: Vec<Field>,
    images: Vec<Field>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    condition: f64,
}

impl ProjectionBasis {
    pub fn new(f: &Functional<'_>, u: &Field) -> Result<Self> {
        let op = f.operator();
        let derivatives: Vec<Field> = (0..op.grid().dim())
            .map(|a| op.derivative(u, a))
            .collect::<Result<_>>()?;
        let members: Vec<&Field> = std::iter::once(u).chain(derivatives.iter()).collect();
        let images: Vec<Field> = members.iter().map(|b| f.apply_linear(b)).collect::<Result<_>>()?;
        let k = members.len();
        let gram = DMatrix::from_fn(k, k, |i, j| 0.5 * (members[i].dot(&images[j]) + members[j].dot(&images[i])));
        let eig = SymmetricEigen::new(gram.clone());
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition > MAX_GRAM_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        let gram_inv = gram.clone().try_inverse().ok_or(Error::IllConditioned(condition))?;
        Ok(Self {
            base: u.clone(),
            derivatives,
            images,
            gram,
            gram_inv,
            condition,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    fn member(&self, j: usize) -> &Field {
        if j == 0 {
            &self.base
        } else {
            &self.derivatives[j - 1]
        }
    }

    /// ε-orthogonal projection onto `W_ε`.
    pub fn project(&self, v: &Field) -> Field {
        let rhs = DVector::from_iterator(self.images.len(), self.images.iter().map(|a| v.dot(a)));
        let c = &self.gram_inv * rhs;
        let mut out = v.clone();
        for (j, cj) in c.iter().enumerate() {
            out.axpy(-cj, self.member(j));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoercivityReport {
    /// Smallest `J''[v,v]/‖v‖²_ε` found over `W_ε`.
    pub min_quotient: f64,
    /// `J''[U,U]/‖U‖²_ε`.
    pub neg_direction_value: f64,
    pub probe_min: f64,
    /// Final Ritz value of the iterative estimate.
    pub ritz_value: f64,
    /// `‖r‖_{P⁻¹} / ‖v‖_ε` of the final Ritz pair.
    pub ritz_residual: f64,
    pub estimate_converged: bool,
    /// Rough enclosure `[ritz - residual, ritz]` of the minimum.
    pub bracket: (f64, f64),
    pub gram_condition: f64,
    pub probes: usize,
}

fn probe_field(grid: crate::grid::Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut centre = [0.0; 2];
    for c in centre.iter_mut().take(dim) {
        *c = rng.gen_range(-2.0..2.0);
    }
    let width = rng.gen_range(0.7..3.0);
    let modes: Vec<([f64; 2], f64, f64)> = (0..6)
        .map(|_| {
            let mut k = [0.0; 2];
            for kk in k.iter_mut().take(dim) {
                *kk = rng.gen_range(-2.5..2.5);
            }
            (k, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0))
        })
        .collect();
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(&centre).map(|(a, c)| (a - c).powi(2)).sum();
        let osc: f64 = modes
            .iter()
            .map(|(k, ph, amp)| amp * (x.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() + ph).cos())
            .sum();
        (-r2 / (width * width)).exp() * osc
    })
}

struct Quad<'a> {
    f: &'a Functional<'a>,
    weight: Field,
}

impl Quad<'_> {
    fn h(&self, v: &Field) -> Result<Field> {
        Ok(self.f.apply_linear(v)?.zip_map(&v.mul(&self.weight), |a, b| a - b))
    }
}

/// Probes `J''` at `(U, ν)` on `W_ε` with `n_probe` seeded random fields and
/// a 50-step locally optimal block iteration started from the best probe.
pub fn coercivity_check(
    u: &Field,
    nu: f64,
    params: &ProblemParams,
    op: &FracLapOperator,
    n_probe: usize,
    seed: u64,
    exec: Execution,
) -> Result<CoercivityReport> {
    if n_probe == 0 {
        return Err(Error::Diagnostic("coercivity check needs at least one probe".to_string()));
    }
    let f = Functional::new(params, op)?;
    let basis = ProjectionBasis::new(&f, u)?;
    let q = Quad {
        f: &f,
        weight: f.hessian_weight(u, nu),
    };
    let grid = *op.grid();
    let shift = f.potential().integral() / (2.0 * grid.half_width()).powi(grid.dim() as i32);

    let rq = |v: &Field| -> Result<f64> {
        let hv = q.h(v)?;
        let av = f.apply_linear(v)?;
        Ok(v.dot(&hv) / v.dot(&av))
    };

    let neg_direction_value = rq(u)?;

    let probes: Vec<Result<(f64, Field)>> = exec.map_range(n_probe, |i| {
        let v = basis.project(&probe_field(grid, seed.wrapping_add(i as u64)));
        Ok((rq(&v)?, v))
    });
    let mut best: Option<(f64, Field)> = None;
    for pr in probes {
        let (val, v) = pr?;
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, v));
        }
    }
    let (probe_min, mut x) = best.expect("n_probe > 0");

    let enorm = |v: &Field| -> Result<f64> { Ok(v.dot(&f.apply_linear(v)?).sqrt()) };
    x.scale_in_place(1.0 / enorm(&x)?);
    let mut prev: Option<Field> = None;
    let mut ritz = probe_min;
    let mut residual = f64::INFINITY;

    for _ in 0..LOBPCG_ITERATIONS {
        let hx = q.h(&x)?;
        let ax = f.apply_linear(&x)?;
        ritz = x.dot(&hx) / x.dot(&ax);
        let r = hx.zip_map(&ax, |a, b| a - ritz * b);
        let pr = op.resolvent(&r, shift)?;
        residual = r.dot(&pr).max(0.0).sqrt() / x.dot(&ax).sqrt();
        if residual <= EIGEN_TOLERANCE * ritz.abs().max(1e-3) {
            break;
        }
        let mut w = basis.project(&pr);
        w.scale_in_place(1.0 / enorm(&w)?);
        let mut span = vec![x.clone(), w];
        if let Some(p) = prev.take() {
            let pn = enorm(&p)?;
            if pn > 0.0 {
                span.push(p.scaled(1.0 / pn));
            }
        }
        let (coeffs, value) = loop {
            let k = span.len();
            let hs: Vec<Field> = span.iter().map(|s| q.h(s)).collect::<Result<_>>()?;
            let as_: Vec<Field> = span.iter().map(|s| f.apply_linear(s)).collect::<Result<_>>()?;
            let hm = DMatrix::from_fn(k, k, |i, j| 0.5 * (span[i].dot(&hs[j]) + span[j].dot(&hs[i])));
            let am = DMatrix::from_fn(k, k, |i, j| 0.5 * (span[i].dot(&as_[j]) + span[j].dot(&as_[i])));
            match ritz_pair(&hm, &am) {
                Some(pair) => break pair,
                None if k > 2 => {
                    span.pop();
                }
                None => {
                    return Err(Error::Diagnostic(
                        "search space collapsed in the minimum estimate".to_string(),
                    ))
                }
            }
        };
        let mut next = Field::zeros(grid);
        let mut dir = Field::zeros(grid);
        for (i, s) in span.iter().enumerate() {
            next.axpy(coeffs[i], s);
            if i > 0 {
                dir.axpy(coeffs[i], s);
            }
        }
        ritz = value;
        let next = basis.project(&next);
        let n = enorm(&next)?;
        x = next.scaled(1.0 / n);
        prev = Some(dir);
    }

    let estimate_converged = residual <= EIGEN_TOLERANCE * ritz.abs().max(1e-3);
    Ok(CoercivityReport {
        min_quotient: probe_min.min(ritz),
        neg_direction_value,
        probe_min,
        ritz_value: ritz,
        ritz_residual: residual,
        estimate_converged,
        bracket: (ritz - residual, ritz),
        gram_condition: basis.condition_number(),
        probes: n_probe,
    })
}

/// Lowest generalized eigenpair of `(H, A)` with `A` positive definite.
fn ritz_pair(h: &DMatrix<f64>, a: &DMatrix<f64>) -> Option<(Vec<f64>, f64)> {
    let ea = SymmetricEigen::new(a.clone());
    let hi = ea.eigenvalues.max();
    if !(ea.eigenvalues.min() > 1e-10 * hi) {
        return None;
    }
    // A^{-1/2} H A^{-1/2}
    let inv_sqrt = DMatrix::from_diagonal(&ea.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let t = &ea.eigenvectors * inv_sqrt;
    let c = t.transpose() * h * &t;
    let c = 0.5 * (&c + c.transpose());
    let ec = SymmetricEigen::new(c);
    let (idx, val) = ec
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))?;
    let y = ec.eigenvectors.column(idx).into_owned();
    let z = t * y;
    Some((z.iter().copied().collect(), val))
}
