//! Invariants that hold for every input, checked on generated fields.

use fracground_core::analysis::{decay_fit, ProjectionBasis};
use fracground_core::model::Functional;
use fracground_core::{Field, FracLapOperator, Grid, Potential, ProblemParams};
use proptest::prelude::*;

const N1: usize = 128;

/// Smooth periodic field from a handful of Fourier modes plus a bump.
fn field_1d(coeffs: &[(i32, f64, f64)], bump: f64) -> Field {
    let g = Grid::new(1, N1, 6.0).unwrap();
    let step = g.frequency_step();
    Field::from_fn(g, |x| {
        let waves: f64 = coeffs
            .iter()
            .map(|&(k, a, ph)| a * (step * f64::from(k) * x[0] + ph).cos())
            .sum();
        waves + bump * (-x[0] * x[0]).exp()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(i32, f64, f64)>> {
    prop::collection::vec((-20i32..20, -1.0f64..1.0, 0.0f64..6.3), 1..6)
}

fn positive_field() -> impl Strategy<Value = Field> {
    (coeffs(), 0.5f64..2.0).prop_map(|(c, b)| {
        let f = field_1d(&c, b);
        let m = f.min_value();
        f.map(|v| v - m + 0.05)
    })
}

fn order() -> impl Strategy<Value = f64> {
    0.05f64..=1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linearity(c1 in coeffs(), c2 in coeffs(), a in -3.0f64..3.0, b in -3.0f64..3.0, s in order()) {
        let u = field_1d(&c1, 0.3);
        let w = field_1d(&c2, -0.7);
        let op = FracLapOperator::new(*u.grid(), s).unwrap();
        let mut comb = u.scaled(a);
        comb.axpy(b, &w);
        let lhs = op.apply(&comb).unwrap();
        let mut rhs = op.apply(&u).unwrap().scaled(a);
        rhs.axpy(b, &op.apply(&w).unwrap());
        let scale = rhs.l2_norm().max(1.0);
        prop_assert!(lhs.sub(&rhs).l2_norm() <= 1e-11 * scale);
    }

    #[test]
    fn symmetry(c1 in coeffs(), c2 in coeffs(), s in order()) {
        let u = field_1d(&c1, 1.0);
        let w = field_1d(&c2, 0.5);
        let op = FracLapOperator::new(*u.grid(), s).unwrap();
        let a = op.apply(&u).unwrap().dot(&w);
        let b = u.dot(&op.apply(&w).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-12));
    }

    #[test]
    fn spectral_evenness_and_oddness(c in coeffs(), bump in -1.0f64..1.0, s in order()) {
        let u = field_1d(&c, bump);
        let op = FracLapOperator::new(*u.grid(), s).unwrap();
        let t = op.transform();
        let coeffs = t.forward(&u);
        let spec = op.half_power_spectrum(&u).unwrap();
        let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let mut odd = 0.0;
        let mut weight = 0.0;
        for idx in 0..coeffs.len() {
            if t.is_unpaired(idx) {
                continue;
            }
            let m = t.mirror_index(idx);
            prop_assert!((coeffs[idx].norm_sqr() - coeffs[m].norm_sqr()).abs() <= 1e-12 * total.max(1.0));
            let xi = t.wavevector(idx)[0];
            odd += xi * spec[idx];
            weight += xi.abs() * spec[idx];
        }
        prop_assert!(odd.abs() <= 1e-12 * weight.max(1.0));
    }

    #[test]
    fn derivative_is_orthogonal_to_field(c in coeffs(), bump in -1.0f64..1.0) {
        let u = field_1d(&c, bump);
        let op = FracLapOperator::new(*u.grid(), 0.5).unwrap();
        let du = op.derivative(&u, 0).unwrap();
        prop_assert!(du.dot(&u).abs() <= 1e-12 * (du.l2_norm() * u.l2_norm()).max(1e-12));
    }

    #[test]
    fn quotient_is_homogeneous(u in positive_field(), t in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let g = *u.grid();
        let params = ProblemParams::new(1, 0.5, 3.0, 0.4, &[0.2], Potential::smooth_well(&[0.0]).unwrap()).unwrap();
        let op = FracLapOperator::new(g, 0.5).unwrap();
        let f = Functional::new(&params, &op).unwrap();
        let q = f.quotient(&u).unwrap();
        let qt = f.quotient(&u.scaled(t)).unwrap();
        prop_assert!((q - qt).abs() <= 1e-12 * q);
        prop_assert!(q > 0.0);
    }

    #[test]
    fn quotient_is_monotone_in_the_potential(u in positive_field(), eps in 0.0f64..2.0, x0 in -2.0f64..2.0) {
        let g = *u.grid();
        let op = FracLapOperator::new(g, 0.5).unwrap();
        let well = Potential::smooth_well(&[0.0]).unwrap();
        let params = ProblemParams::new(1, 0.5, 3.0, eps, &[x0], well).unwrap();
        let floor = params.limit_problem();
        let q = Functional::new(&params, &op).unwrap().quotient(&u).unwrap();
        let q_floor = Functional::new(&floor, &op).unwrap().quotient(&u).unwrap();
        prop_assert!(q_floor <= q * (1.0 + 1e-14));
    }

    #[test]
    fn projection_is_idempotent_and_annihilates_the_basis(c in coeffs(), eps in 0.0f64..1.0) {
        let g = Grid::new(1, N1, 6.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0] * x[0]));
        let op = FracLapOperator::new(g, 0.5).unwrap();
        let params = ProblemParams::new(1, 0.5, 3.0, eps, &[0.0], Potential::smooth_well(&[0.0]).unwrap()).unwrap();
        let f = Functional::new(&params, &op).unwrap();
        let basis = ProjectionBasis::new(&f, &u).unwrap();
        let v = field_1d(&c, 0.2);
        let once = basis.project(&v);
        let twice = basis.project(&once);
        prop_assert!(twice.sub(&once).l2_norm() <= 1e-10 * v.l2_norm().max(1e-12));
        let du = op.derivative(&u, 0).unwrap();
        prop_assert!(basis.project(&du).l2_norm() <= 1e-8 * du.l2_norm());
    }

    #[test]
    fn translation_leaves_residual_norm_unchanged(u in positive_field(), m in -40isize..40, nu in 0.5f64..3.0) {
        let g = *u.grid();
        let op = FracLapOperator::new(g, 0.5).unwrap();
        let params = ProblemParams::new(1, 0.5, 3.0, 1.0, &[0.0], Potential::constant(1.0, 1).unwrap()).unwrap();
        let f = Functional::new(&params, &op).unwrap();
        let a = f.el_residual(&u, nu).unwrap().l2_norm();
        let b = f.el_residual(&u.roll(&[m]), nu).unwrap().l2_norm();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn power_law_decay_is_recovered(idx in 0usize..3, l in 200.0f64..1000.0) {
        let q = [1.5, 2.0, 3.0][idx];
        let g = Grid::new(1, 1 << 16, l).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0].abs().powf(q)));
        let fit = decay_fit(&u, (0.3 * l, 0.7 * l)).unwrap();
        prop_assert!((fit.slope + q).abs() <= 1e-2, "q = {}, slope = {}", q, fit.slope);
        prop_assert!(fit.power_law);
    }
}
