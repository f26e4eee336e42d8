//! Maximizer, decay, criticality, convergence, orthogonality, coercivity and
//! multi-start diagnostics on solver output.

use std::sync::OnceLock;

use fracground_core::analysis::{
    coercivity_check, criticality_residual, decay_fit, default_window, hs_distance, locate_maximizer,
    multistart_uniqueness, nu_convergence, orthogonality_diagnostics, profile_gap, refine_maximum, strictly_decreasing,
    SweepReport,
};
use fracground_core::model::Functional;
use fracground_core::solver::{ground_state_constant, GroundState};
use fracground_core::{Execution, Field, FracLapOperator, Grid, Potential, ProblemParams, SolverConfig};

fn refined() -> SolverConfig {
    SolverConfig {
        refine: true,
        ..SolverConfig::default()
    }
}

fn ground_1d() -> &'static (GroundState, FracLapOperator) {
    static CELL: OnceLock<(GroundState, FracLapOperator)> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = Grid::new(1, 2048, 32.0).unwrap();
        let gs = ground_state_constant(1.0, 1, 0.5, 3.0, g, &refined()).unwrap();
        (gs, FracLapOperator::new(g, 0.5).unwrap())
    })
}

fn constant_params(dim: usize) -> ProblemParams {
    ProblemParams::new(dim, 0.5, 3.0, 0.0, &vec![0.0; dim], Potential::constant(1.0, dim).unwrap()).unwrap()
}

#[test]
fn recentred_ground_state_peaks_at_the_origin() {
    let (gs, op) = ground_1d();
    let g = *op.grid();
    let m = locate_maximizer(&gs.result.minimizer).unwrap();
    assert!(m.point[0].abs() <= g.spacing() / 10.0);
    assert!(!m.multiplicity);
    let x = refine_maximum(&gs.result.minimizer, op.transform()).unwrap();
    assert!(x[0].abs() <= 1e-10);
}

#[test]
fn node_shift_is_recovered_exactly() {
    let (gs, _) = ground_1d();
    let u = &gs.result.minimizer;
    let g = *u.grid();
    let m = locate_maximizer(&u.roll(&[3])).unwrap();
    assert_eq!(m.node, g.origin_node() + 3);
}

#[test]
fn cosine_maximum_is_refined_to_second_order() {
    let g = Grid::new(1, 128, 5.0).unwrap();
    let l = g.half_width();
    let u = Field::from_fn(g, |x| (std::f64::consts::PI * x[0] / l).cos());
    let m = locate_maximizer(&u).unwrap();
    assert!(m.point[0].abs() <= g.spacing().powi(2));
}

#[test]
fn synthetic_power_law_and_gaussian_decay() {
    let g = Grid::new(1, 4096, 64.0).unwrap();
    let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0].abs().powi(2)));
    let fit = decay_fit(&u, default_window(64.0)).unwrap();
    assert!((fit.slope + 2.0).abs() <= 1e-2, "{}", fit.slope);
    assert!(fit.power_law);

    let g = Grid::new(1, 1024, 8.0).unwrap();
    let gauss = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
    let fit = decay_fit(&gauss, (1.0, 5.0)).unwrap();
    assert!(!fit.power_law);
    assert!(fit.slope < -4.0, "{}", fit.slope);
}

#[test]
fn decay_fit_rejects_bad_windows() {
    let g = Grid::new(1, 1024, 16.0).unwrap();
    let u = Field::from_fn(g, |x| 1.0 / (1.0 + x[0] * x[0]));
    assert!(decay_fit(&u, (2.0, 15.0)).is_err());
    let signed = Field::from_fn(g, |x| x[0].cos());
    assert!(decay_fit(&signed, (2.0, 10.0)).is_err());
    assert!(decay_fit(&u, (4.0, 4.001)).is_err());
}

#[test]
fn ground_state_tail_follows_the_predicted_exponent() {
    let g = Grid::new(1, 4096, 64.0).unwrap();
    for s in [0.5, 0.75] {
        let gs = ground_state_constant(1.0, 1, s, 3.0, g, &refined()).unwrap();
        let fit = decay_fit(&gs.result.minimizer, (10.0, 45.0)).unwrap();
        let expected = -(1.0 + 2.0 * s);
        assert!(((fit.slope - expected) / expected).abs() <= 0.15, "s = {s}: {}", fit.slope);
    }
}

#[test]
fn criticality_vanishes_for_constant_and_centred_problems() {
    let (gs, _) = ground_1d();
    let u = &gs.result.minimizer;
    let constant = ProblemParams::new(1, 0.5, 3.0, 0.3, &[1.0], Potential::constant(2.0, 1).unwrap()).unwrap();
    assert_eq!(criticality_residual(u, &constant), vec![0.0]);
    let well = ProblemParams::new(1, 0.5, 3.0, 0.25, &[0.0], Potential::smooth_well(&[0.0]).unwrap()).unwrap();
    assert!(criticality_residual(u, &well)[0].abs() <= 1e-14);
}

#[test]
fn profile_gap_of_the_ground_state_itself_and_a_shift() {
    let (gs, op) = ground_1d();
    let u = &gs.result.minimizer;
    let same = profile_gap(u, u, op).unwrap();
    assert!(same.gap <= 1e-12);
    assert!(same.shift[0].abs() <= 1e-12);
    let moved = profile_gap(&u.roll(&[5]), u, op).unwrap();
    assert!(moved.gap <= 1e-6, "{:e}", moved.gap);
    assert!((moved.shift[0] - 5.0 * op.grid().spacing()).abs() <= 1e-9);
    assert!(!moved.wrap_flag);
}

fn report(nus: Vec<f64>, converged: Vec<bool>) -> SweepReport {
    let k = nus.len();
    SweepReport {
        eps_list: (0..k).map(|i| 0.5f64.powi(i as i32 + 1)).collect(),
        nu_list: nus,
        maximizer_list: vec![vec![0.0]; k],
        decay_slope_list: vec![None; k],
        criticality_list: vec![0.0; k],
        profile_gap_list: vec![0.0; k],
        converged_flags: converged,
    }
}

#[test]
fn nu_convergence_contracts() {
    let flat = nu_convergence(&report(vec![2.0; 3], vec![true; 3]), 2.0, 1e-6).unwrap();
    assert!(flat.gaps.iter().all(|g| g.unwrap() == 0.0));
    assert!(flat.below_threshold);

    let excluded = nu_convergence(&report(vec![2.3, 9.0, 2.1, 2.05], vec![true, false, true, true]), 2.0, 0.1).unwrap();
    assert!(excluded.pass);
    assert_eq!(excluded.trend.used, vec![0, 2, 3]);
    assert_eq!(excluded.gaps[1], None);

    let broken = nu_convergence(&report(vec![2.3, 2.4, 2.1], vec![true; 3]), 2.0, 1.0).unwrap();
    assert!(!broken.pass);
    assert_eq!(broken.trend.offending, Some((0, 1)));

    assert!(nu_convergence(&report(vec![2.3, 2.2, 2.1], vec![true, false, true]), 2.0, 1.0).is_err());
}

#[test]
fn trend_ignores_unconverged_entries() {
    let t = strictly_decreasing(&[Some(3.0), Some(5.0), Some(2.0)], &[true, false, true]);
    assert!(t.pass);
    assert_eq!(t.used, vec![0, 2]);
}

#[test]
fn orthogonality_in_one_and_two_dimensions() {
    let (gs, op) = ground_1d();
    let o = orthogonality_diagnostics(&gs.result.minimizer, op, 1.0, 3.0).unwrap();
    assert!(o.max_offdiag <= 1e-6 && o.max_nonlinear <= 1e-6, "{o:?}");

    let g = Grid::new(2, 128, 12.0).unwrap();
    let gs2 = ground_state_constant(1.0, 2, 0.5, 2.0, g, &SolverConfig::default()).unwrap();
    let op2 = FracLapOperator::new(g, 0.5).unwrap();
    let o = orthogonality_diagnostics(&gs2.result.minimizer, &op2, 1.0, 2.0).unwrap();
    assert_eq!(o.gram.len(), 3);
    assert!(o.max_offdiag <= 1e-6 && o.max_nonlinear <= 1e-6, "{o:?}");
}

#[test]
fn second_variation_is_negative_along_the_ground_state() {
    let (gs, op) = ground_1d();
    let params = constant_params(1);
    let f = Functional::new(&params, op).unwrap();
    let u = &gs.result.minimizer;
    let value = f.second_variation(u, gs.result.nu, u, u).unwrap() / f.eps_norm_sq(u).unwrap();
    assert!((value - (1.0 - params.p())).abs() <= 1e-10, "{value}");
}

#[test]
fn coercivity_sign_checks() {
    let (gs, op) = ground_1d();
    let params = constant_params(1);
    let r = coercivity_check(&gs.result.minimizer, gs.result.nu, &params, op, 16, 7, Execution::Parallel).unwrap();
    assert!(r.min_quotient > 0.01, "{r:?}");
    assert!(r.neg_direction_value < 0.0);
    assert!(r.min_quotient <= r.probe_min);
}

#[test]
fn coercivity_is_execution_independent() {
    let (gs, op) = ground_1d();
    let params = constant_params(1);
    let run = |exec| coercivity_check(&gs.result.minimizer, gs.result.nu, &params, op, 8, 3, exec).unwrap();
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn multistart_on_a_constant_potential_is_unique_up_to_translation() {
    let g = Grid::new(1, 2048, 32.0).unwrap();
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let params = ProblemParams::new(1, 0.5, 3.0, 1.0, &[0.0], Potential::constant(1.0, 1).unwrap()).unwrap();
    let r = multistart_uniqueness(&params, &op, &refined(), 5, 21, Execution::Parallel).unwrap();
    assert!(r.all_converged, "{r:?}");
    assert_eq!(r.unique, Some(true), "gap {:e}", r.max_pairwise_gap);
}

#[test]
fn multistart_needs_three_starts() {
    let (_, op) = ground_1d();
    let params = ProblemParams::new(1, 0.5, 3.0, 1.0, &[0.0], Potential::constant(1.0, 1).unwrap()).unwrap();
    assert!(multistart_uniqueness(&params, op, &refined(), 2, 0, Execution::Sequential).is_err());
}

#[test]
fn double_well_multistart_is_exploratory() {
    let g = Grid::new(1, 1024, 32.0).unwrap();
    let op = FracLapOperator::new(g, 0.5).unwrap();
    let params = ProblemParams::new(1, 0.5, 3.0, 0.3, &[0.0], Potential::double_well(1.0, 1).unwrap()).unwrap();
    let cfg = SolverConfig {
        max_iters: 400,
        ..SolverConfig::default()
    };
    let r = multistart_uniqueness(&params, &op, &cfg, 5, 0, Execution::Parallel).unwrap();
    eprintln!(
        "double_well exploratory: gap {:e}, converged {:?}, unique {:?}",
        r.max_pairwise_gap, r.converged, r.unique
    );
    assert_eq!(r.nus.len(), 5);
    assert!(r.nus.iter().all(|nu| nu.is_finite() && *nu > 0.0));
}

#[test]
fn distances_between_two_ground_states_use_the_hs_norm() {
    let (gs, op) = ground_1d();
    let u = &gs.result.minimizer;
    let d = hs_distance(u, &u.scaled(1.5), op).unwrap();
    let expected = 0.5 * op.hs_norm_sq(u).unwrap().sqrt();
    assert!((d - expected).abs() <= 1e-12 * expected);
}
