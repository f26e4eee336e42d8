//! Descent and Newton-stage contracts on constant and well potentials.

use fracground_core::analysis::{hs_distance, locate_maximizer, recenter, refine_maximum};
use fracground_core::model::Functional;
use fracground_core::solver::{
    ground_state_constant, init_field, minimize_rayleigh, minimize_rayleigh_from, newton_refine, InitKind, StopReason,
};
use fracground_core::{Error, Field, FracLapOperator, Grid, Potential, ProblemParams, SolverConfig};

fn constant_problem(lambda: f64) -> ProblemParams {
    ProblemParams::new(1, 0.5, 3.0, 1.0, &[0.0], Potential::constant(lambda, 1).unwrap()).unwrap()
}

fn reference_grid() -> Grid {
    Grid::new(1, 2048, 32.0).unwrap()
}

fn check_result_invariants(params: &ProblemParams, op: &FracLapOperator, r: &fracground_core::SolveResult) {
    let p = params.p();
    assert!((r.minimizer.lp_norm(p + 1.0) - 1.0).abs() <= 1e-10);
    assert!(r.minimizer.min_value() >= 0.0);
    let q = Functional::new(params, op).unwrap().quotient(&r.minimizer).unwrap();
    assert!((q - r.nu).abs() <= 1e-12 * q);
    if r.converged {
        assert!(r.residual_l2 <= SolverConfig::default().tol_residual);
    }
    for w in r.energy_trace.windows(2) {
        assert!(w[1] <= w[0], "quotient increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn unit_potential_converges_to_even_profile() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let r = minimize_rayleigh(&params, &op, &SolverConfig::default()).unwrap();
    assert!(r.converged, "residual {:e}", r.residual_l2);
    assert_eq!(r.stop_reason, StopReason::Residual);
    check_result_invariants(&params, &op, &r);

    let (centred, _) = recenter(&r.minimizer, op.transform()).unwrap();
    let rel = centred.sub(&centred.reflect()).l2_norm() / centred.l2_norm();
    assert!(rel <= 1e-4, "{rel:e}");
}

#[test]
fn doubling_the_constant_scales_nu_by_sqrt_two() {
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let cfg = SolverConfig {
        refine: true,
        ..SolverConfig::default()
    };
    let one = minimize_rayleigh(&constant_problem(1.0), &op, &cfg).unwrap();
    let two = minimize_rayleigh(&constant_problem(2.0), &op, &cfg).unwrap();
    assert!(one.converged && two.converged);
    let ratio = two.nu / one.nu;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() <= 1e-3, "{ratio}");
}

#[test]
fn energy_at_the_minimizer_is_a_quarter_of_nu() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let r = minimize_rayleigh(&params, &op, &SolverConfig::default()).unwrap();
    let f = Functional::new(&params, &op).unwrap();
    let j = f.energy(&r.minimizer, r.nu).unwrap();
    assert!((j - r.nu / 4.0).abs() <= 1e-12 * r.nu);
    assert_eq!(f.energy(&Field::zeros(*op.grid()), r.nu).unwrap(), 0.0);
}

#[test]
fn weak_form_vanishes_at_a_converged_minimizer() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let cfg = SolverConfig::default();
    let r = minimize_rayleigh(&params, &op, &cfg).unwrap();
    assert!(r.residual_l2 <= cfg.tol_residual);
    let f = Functional::new(&params, &op).unwrap();
    for seed in 0..20u64 {
        let phi = init_field(*op.grid(), InitKind::RandomPositive, seed, None)
            .unwrap()
            .roll(&[seed as isize * 37 - 300]);
        let phi = phi.zip_map(&op.derivative(&phi, 0).unwrap(), |a, b| a - 0.5 * b);
        let d = f.gateaux(&r.minimizer, r.nu, &phi).unwrap();
        assert!(d.abs() <= cfg.tol_residual * phi.l2_norm(), "seed {seed}: {d:e}");
    }
}

#[test]
fn descent_is_equivariant_under_lattice_shifts() {
    let params = constant_problem(1.0);
    let g = Grid::new(1, 1024, 32.0).unwrap();
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let cfg = SolverConfig::default();
    let base = init_field(g, InitKind::GaussianBump, 0, None).unwrap();
    let shift = 7;
    let warm_cfg = SolverConfig {
        init_kind: InitKind::WarmStart,
        ..cfg.clone()
    };
    let a = minimize_rayleigh_from(&params, &op, &warm_cfg, Some(&base), None).unwrap();
    let b = minimize_rayleigh_from(&params, &op, &warm_cfg, Some(&base.roll(&[shift])), None).unwrap();
    let diff = a.minimizer.roll(&[shift]).sub(&b.minimizer).max_abs();
    assert!(diff <= 1e-8, "{diff:e}");
}

#[test]
fn identical_inputs_give_identical_runs() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(Grid::new(1, 1024, 32.0).unwrap(), 0.5).unwrap();
    let cfg = SolverConfig {
        init_kind: InitKind::RandomPositive,
        rng_seed: 5,
        ..SolverConfig::default()
    };
    let a = minimize_rayleigh(&params, &op, &cfg).unwrap();
    let b = minimize_rayleigh(&params, &op, &cfg).unwrap();
    assert_eq!(a.energy_trace, b.energy_trace);
    assert_eq!(a.residual_l2, b.residual_l2);
    assert_eq!(a.minimizer, b.minimizer);
}

#[test]
fn one_iteration_reports_non_convergence() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let cfg = SolverConfig {
        max_iters: 1,
        ..SolverConfig::default()
    };
    let r = minimize_rayleigh(&params, &op, &cfg).unwrap();
    assert!(!r.converged);
    assert_eq!(r.stop_reason, StopReason::MaxIters);
    assert!(r.residual_l2 > cfg.tol_residual);
    check_result_invariants(&params, &op, &r);
}

#[test]
fn degenerate_start_is_a_configuration_error() {
    let params = constant_problem(1.0);
    let g = Grid::new(1, 256, 8.0).unwrap();
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let cfg = SolverConfig {
        init_kind: InitKind::WarmStart,
        ..SolverConfig::default()
    };
    let zero = Field::zeros(g);
    assert!(minimize_rayleigh_from(&params, &op, &cfg, Some(&zero), None).is_err());
    let mut spike = Field::zeros(g);
    spike.values_mut()[0] = 1e-300;
    assert!(minimize_rayleigh_from(&params, &op, &cfg, Some(&spike), None).is_err());
    let bad = SolverConfig {
        step: 0.0,
        ..SolverConfig::default()
    };
    assert!(matches!(minimize_rayleigh(&params, &op, &bad), Err(Error::SolverConfiguration(_))));
}

#[test]
fn cooperative_stop_flag_cancels() {
    use std::sync::atomic::AtomicBool;
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(Grid::new(1, 256, 16.0).unwrap(), 0.5).unwrap();
    let stop = AtomicBool::new(true);
    let r = minimize_rayleigh_from(&params, &op, &SolverConfig::default(), None, Some(&stop));
    assert!(matches!(r, Err(Error::Cancelled(_))));
}

#[test]
fn newton_stage_reaches_round_off_from_descent_output() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let cfg = SolverConfig::default();
    let d = minimize_rayleigh(&params, &op, &cfg).unwrap();
    let r = newton_refine(&d.minimizer, &params, &op, d.nu, &cfg).unwrap();
    assert!(r.residual_l2 < 1e-10, "{:e}", r.residual_l2);
    assert!(r.newton_steps <= 5);
    assert!(r.refine_fallback.is_none());
    check_result_invariants(&params, &op, &r);
}

#[test]
fn newton_fixed_point_is_stationary() {
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let cfg = SolverConfig {
        refine: true,
        ..SolverConfig::default()
    };
    let r = minimize_rayleigh(&params, &op, &cfg).unwrap();
    let again = newton_refine(&r.minimizer, &params, &op, r.nu, &cfg).unwrap();
    let moved = again.minimizer.sub(&r.minimizer).max_abs();
    assert!(moved <= 1e-12, "{moved:e}");
    assert!((again.nu - r.nu).abs() <= 1e-13 * r.nu);
}

#[test]
fn newton_recovers_the_ground_state_from_a_perturbation() {
    let g = reference_grid();
    let cfg = SolverConfig {
        refine: true,
        ..SolverConfig::default()
    };
    let gs = ground_state_constant(1.0, 1, 0.5, 3.0, g, &cfg).unwrap();
    let u = &gs.result.minimizer;
    let params = constant_problem(1.0);
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let f = Functional::new(&params, &op).unwrap();

    let bump = Field::from_fn(g, |x| (-(x[0] - 0.4).powi(2)).exp());
    let mut best = None;
    for amp in [1e-3, 3e-3, 1e-2, 3e-2] {
        let mut w = u.clone();
        w.axpy(amp, &bump);
        let res = f.el_residual(&w, gs.result.nu).unwrap().l2_norm();
        if res >= 1e-2 {
            best = Some(w);
            break;
        }
    }
    let start = best.expect("perturbation with residual 1e-2");
    let r = newton_refine(&start, &params, &op, gs.result.nu, &cfg).unwrap();
    let (aligned, _) = recenter(&r.minimizer, op.transform()).unwrap();
    let gap = hs_distance(&aligned, u, &op).unwrap();
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn independent_seeds_give_the_same_recentred_profile() {
    let g = reference_grid();
    let make = |seed| SolverConfig {
        init_kind: InitKind::RandomPositive,
        rng_seed: seed,
        refine: true,
        ..SolverConfig::default()
    };
    let a = ground_state_constant(1.0, 1, 0.5, 3.0, g, &make(1)).unwrap();
    let b = ground_state_constant(1.0, 1, 0.5, 3.0, g, &make(2)).unwrap();
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let gap = hs_distance(&a.result.minimizer, &b.result.minimizer, &op).unwrap();
    assert!(gap <= 1e-6, "{gap:e}");
    let m = locate_maximizer(&a.result.minimizer).unwrap();
    assert_eq!(m.node, g.origin_node());
}

#[test]
fn near_classical_order_approaches_the_sech_profile() {
    // s = 1, p = 3, V = 1: -u'' + u = νu³ has the maximum-normalized solution sech.
    let g = Grid::new(1, 2048, 32.0).unwrap();
    let cfg = SolverConfig {
        refine: true,
        ..SolverConfig::default()
    };
    let sech = Field::from_fn(g, |x| 1.0 / x[0].cosh());
    for (s, tol) in [(1.0, 1e-8), (0.99, 0.02)] {
        let gs = ground_state_constant(1.0, 1, s, 3.0, g, &cfg).unwrap();
        assert!(gs.result.converged, "s = {s}");
        let u = &gs.result.minimizer;
        let shape = u.scaled(1.0 / u.max_value());
        let rel = shape.sub(&sech).l2_norm() / sech.l2_norm();
        assert!(rel <= tol, "s = {s}: {rel:e}");
    }
}

#[test]
fn ground_state_is_recentred_and_flags_no_symmetry_defect_in_2d() {
    let g = Grid::new(2, 128, 12.0).unwrap();
    let gs = ground_state_constant(1.0, 2, 0.5, 2.0, g, &SolverConfig::default()).unwrap();
    assert!(gs.result.converged);
    assert!(!gs.symmetry_flag);
    assert!(gs.symmetry_correction <= 1e-4);
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let x = refine_maximum(&gs.result.minimizer, op.transform()).unwrap();
    assert!(x[0].abs() <= g.spacing() / 10.0 && x[1].abs() <= g.spacing() / 10.0);
}

#[test]
fn smooth_well_concentrates_at_the_well_centre() {
    let centre = 0.3;
    let params = ProblemParams::new(1, 0.5, 3.0, 0.25, &[centre], Potential::smooth_well(&[centre]).unwrap()).unwrap();
    let op = FracLapOperator::new(reference_grid(), 0.5).unwrap();
    let r = minimize_rayleigh(&params, &op, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    check_result_invariants(&params, &op, &r);
    let m = refine_maximum(&r.minimizer, op.transform()).unwrap();
    let physical = centre + params.eps() * m[0];
    assert!((physical - centre).abs() <= params.eps());
}

#[test]
fn negative_lambda_is_rejected() {
    let g = Grid::new(1, 64, 8.0).unwrap();
    assert!(ground_state_constant(0.0, 1, 0.5, 3.0, g, &SolverConfig::default()).is_err());
}
