//! The translation identity `∫ ∂_i V(εx + x₀) v² dx = 0` satisfied by
//! rescaled-frame solutions.

use crate::grid::Field;
use crate::model::ProblemParams;

/// Components `∫ ∂_i V(εx+x₀) v² dx / (‖∇V‖_∞ ‖v‖²_{L²})`, one per axis.
/// Exactly zero for constant potentials.
///
/// A node on the cell boundary `x_a = -L` stands for both `±L`, so the
/// gradient there is the average of the two faces.
pub fn criticality_residual(v: &Field, params: &ProblemParams) -> Vec<f64> {
    let dim = params.dim();
    let sup = params.potential().gradient_sup();
    if sup == 0.0 {
        return vec![0.0; dim];
    }
    let g = *v.grid();
    let mut acc = [0.0; 2];
    for (i, &val) in v.values().iter().enumerate() {
        let x = g.coords(i);
        let grad = boundary_gradient(params, &x[..dim], g.half_width());
        for a in 0..dim {
            acc[a] += grad[a] * val * val;
        }
    }
    let norm = sup * v.l2_norm_sq();
    let cell = g.cell_measure();
    acc[..dim].iter().map(|s| s * cell / norm).collect()
}

fn boundary_gradient(params: &ProblemParams, x: &[f64], l: f64) -> [f64; 2] {
    let dim = x.len();
    let on_face: Vec<usize> = (0..dim).filter(|&a| x[a] <= -l).collect();
    if on_face.is_empty() {
        return params.rescaled_gradient(x);
    }
    let corners = 1usize << on_face.len();
    let mut acc = [0.0; 2];
    for mask in 0..corners {
        let mut y = [x[0], if dim > 1 { x[1] } else { 0.0 }];
        for (bit, &a) in on_face.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                y[a] = l;
            }
        }
        let gr = params.rescaled_gradient(&y[..dim]);
        for a in 0..dim {
            acc[a] += gr[a] / corners as f64;
        }
    }
    acc
}

/// Euclidean norm of [`criticality_residual`].
pub fn criticality_norm(components: &[f64]) -> f64 {
    components.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::Potential;

    #[test]
    fn constant_potential_gives_exact_zero() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let v = Field::from_fn(g, |x| (-(x[0] + 1.0).powi(2) - x[1] * x[1]).exp());
        let p = ProblemParams::new(2, 0.5, 2.0, 0.3, &[0.0, 0.0], Potential::constant(1.0, 2).unwrap())
            .unwrap();
        assert_eq!(criticality_residual(&v, &p), vec![0.0, 0.0]);
    }

    #[test]
    fn even_field_at_well_centre_is_round_off() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let v = Field::from_fn(g, |x| 1.0 / (1.0 + x[0] * x[0]));
        let p = ProblemParams::new(1, 0.5, 3.0, 0.25, &[0.5], Potential::smooth_well(&[0.5]).unwrap())
            .unwrap();
        assert!(criticality_residual(&v, &p)[0].abs() < 1e-14);
    }

    #[test]
    fn off_centre_field_is_detected() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let v = Field::from_fn(g, |x| (-(x[0] - 2.0).powi(2)).exp());
        let p = ProblemParams::new(1, 0.5, 3.0, 0.25, &[0.0], Potential::smooth_well(&[0.0]).unwrap())
            .unwrap();
        assert!(criticality_residual(&v, &p)[0] > 0.1);
    }
}
