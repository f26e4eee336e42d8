//! Location of the global maximum of a field.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::spectral::SpectralTransform;

/// Absolute tolerance (scaled by `max(1, |max|)`) for counting nodes as tied.
pub const PLATEAU_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Maximizer {
    /// Lowest flat index attaining the maximum.
    pub node: usize,
    /// Quadratic-fit refinement of `node`; unused components are zero.
    pub point: [f64; 2],
    pub value: f64,
    /// Raised when a tied node is not adjacent to `node`.
    pub multiplicity: bool,
    /// Every node within the plateau tolerance of the maximum.
    pub ties: Vec<usize>,
}

fn neighbours(n: usize, a: usize, b: usize) -> bool {
    let d = |x: usize, y: usize| {
        let d = x.abs_diff(y);
        d.min(n - d)
    };
    d(a, b) <= 1
}

/// Argmax node refined by a least-squares quadratic over its `3^N`
/// neighbourhood. The refinement is clamped to one lattice step.
pub fn locate_maximizer(u: &Field) -> Result<Maximizer> {
    if u.max_abs() == 0.0 {
        return Err(Error::ZeroField);
    }
    let g = *u.grid();
    let vals = u.values();
    let (node, value) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let tol = PLATEAU_TOLERANCE * value.abs().max(1.0);
    let ties: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= value - tol).collect();
    let n = g.points_per_axis();
    let [na, nb] = g.unflatten(node);
    let multiplicity = ties.iter().any(|&t| {
        let [ta, tb] = g.unflatten(t);
        !(neighbours(n, na, ta) && (g.dim() == 1 || neighbours(n, nb, tb)))
    });

    let h = g.spacing();
    let mut point = g.coords(node);
    let wrap = |j: usize, d: isize| (j as isize + d).rem_euclid(n as isize) as usize;
    match g.dim() {
        1 => {
            let fm = vals[wrap(na, -1)];
            let fp = vals[wrap(na, 1)];
            let curv = fm - 2.0 * value + fp;
            if curv < 0.0 {
                let t = (0.5 * (fm - fp) / curv).clamp(-1.0, 1.0);
                point[0] += t * h;
            }
        }
        _ => {
            // f ≈ c0 + c1 t1 + c2 t2 + c3 t1² + c4 t1 t2 + c5 t2²
            let mut ata = SMatrix::<f64, 6, 6>::zeros();
            let mut atb = SVector::<f64, 6>::zeros();
            for da in -1..=1isize {
                for db in -1..=1isize {
                    let (t1, t2) = (da as f64, db as f64);
                    let row = SVector::<f64, 6>::from([1.0, t1, t2, t1 * t1, t1 * t2, t2 * t2]);
                    let f = vals[g.flatten([wrap(na, da), wrap(nb, db)])];
                    ata += row * row.transpose();
                    atb += row * f;
                }
            }
            if let Some(c) = ata.lu().solve(&atb) {
                let hess = Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
                let neg_def = hess[(0, 0)] < 0.0 && hess.determinant() > 0.0;
                if neg_def {
                    if let Some(t) = hess.lu().solve(&Vector2::new(-c[1], -c[2])) {
                        point[0] += t[0].clamp(-1.0, 1.0) * h;
                        point[1] += t[1].clamp(-1.0, 1.0) * h;
                    }
                }
            }
        }
    }
    Ok(Maximizer {
        node,
        point,
        value,
        multiplicity,
        ties,
    })
}

/// Maximum of the trigonometric interpolant, by Newton's method started at
/// the quadratic-fit estimate. Falls back to that estimate when the
/// interpolant is not locally concave or Newton leaves the starting cell.
pub fn refine_maximum(u: &Field, transform: &SpectralTransform) -> Result<[f64; 2]> {
    u.ensure_same_grid(transform.grid())?;
    let m = locate_maximizer(u)?;
    let g = transform.grid();
    let h = g.spacing();
    let dim = g.dim();
    let coeffs = transform.forward(u);
    let start = m.point;
    let mut x = start;
    for _ in 0..30 {
        let jet = transform.interpolant_jet(&coeffs, &x[..dim]);
        let step: [f64; 2] = if dim == 1 {
            let c = jet.hessian[0][0];
            if !(c < 0.0) {
                return Ok(start);
            }
            [-jet.gradient[0] / c, 0.0]
        } else {
            let hm = Matrix2::new(jet.hessian[0][0], jet.hessian[0][1], jet.hessian[1][0], jet.hessian[1][1]);
            if !(hm[(0, 0)] < 0.0 && hm.determinant() > 0.0) {
                return Ok(start);
            }
            match hm.lu().solve(&Vector2::new(-jet.gradient[0], -jet.gradient[1])) {
                Some(t) => [t[0], t[1]],
                None => return Ok(start),
            }
        };
        for i in 0..dim {
            x[i] += step[i];
        }
        if (0..dim).any(|i| (x[i] - start[i]).abs() > 1.5 * h) {
            return Ok(start);
        }
        if step.iter().all(|s| s.abs() < 1e-13 * h) {
            break;
        }
    }
    Ok(x)
}

/// Translates `u` by its refined maximizer so the maximum sits at the origin
/// node. Returns the shifted field and the maximizer that was removed.
pub fn recenter(u: &Field, transform: &SpectralTransform) -> Result<(Field, [f64; 2])> {
    let x = refine_maximum(u, transform)?;
    let dim = u.grid().dim();
    let neg: Vec<f64> = x[..dim].iter().map(|v| -v).collect();
    Ok((transform.shift(u, &neg), x))
}
