//! Constrained minimization of the Rayleigh quotient.
//!
//! The descent works on the sphere `‖u‖_{L^{p+1}} = 1`, where the quotient
//! equals `‖u‖²_ε` and its `L²` gradient is `2(Au - Q u^p)`. Each step applies
//! the spectral preconditioner `((-Δ)^s + mean V_ε)⁻¹`, takes the positive
//! part and renormalizes. An optional Newton stage then solves
//! `Au = ν₀u^p` at fixed `ν₀` with MINRES inner solves.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::maximizer::recenter;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::krylov::minres;
use crate::model::{positive_power, Functional, Potential, ProblemParams};
use crate::operator::FracLapOperator;

/// Initial quotient above which a solve is rejected as misconfigured.
pub const MAX_INITIAL_QUOTIENT: f64 = 1e6;
/// Consecutive stalled steps before the energy-stall stop fires.
pub const STALL_WINDOW: usize = 10;
/// Step halvings tried before a line search gives up.
pub const MAX_BACKTRACKS: usize = 40;
/// Relative correction above which the symmetry averaging of a constant-potential
/// ground state is flagged.
pub const SYMMETRY_FLAG_THRESHOLD: f64 = 1e-4;
pub const NEWTON_MAX_STEPS: usize = 8;
pub const NEWTON_INNER_RTOL: f64 = 1e-8;
pub const NEWTON_INNER_MAX_ITERS: usize = 400;
/// Descent residual required before the Newton stage is attempted.
pub const NEWTON_ENTRY_RESIDUAL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    GaussianBump,
    RandomPositive,
    WarmStart,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianBump => "gaussian_bump",
            Self::RandomPositive => "random_positive",
            Self::WarmStart => "warm_start",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gaussian_bump" => Some(Self::GaussianBump),
            "random_positive" => Some(Self::RandomPositive),
            "warm_start" => Some(Self::WarmStart),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Initial descent step.
    pub step: f64,
    /// Target `‖Au - νu^p‖_{L²}`.
    pub tol_residual: f64,
    /// Relative quotient decrease regarded as a stall.
    pub tol_stall: f64,
    pub init_kind: InitKind,
    pub rng_seed: u64,
    /// Run the Newton stage after descent.
    pub refine: bool,
    /// Restrict iterates to fields invariant under the lattice point group
    /// about the origin (even in 1D, square-symmetric in 2D).
    pub radial_class: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            step: 1.0,
            tol_residual: 1e-6,
            tol_stall: 1e-12,
            init_kind: InitKind::GaussianBump,
            rng_seed: 0,
            refine: false,
            radial_class: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SolverConfiguration(m));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".to_string());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.tol_residual > 0.0) {
            return bad(format!("tol_residual must be positive, got {}", self.tol_residual));
        }
        if !(self.tol_stall > 0.0) {
            return bad(format!("tol_stall must be positive, got {}", self.tol_stall));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    Stall,
    LineSearch,
    MaxIters,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Residual => "residual",
            Self::Stall => "stall",
            Self::LineSearch => "line_search",
            Self::MaxIters => "max_iters",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Non-negative, `‖·‖_{L^{p+1}} = 1`.
    pub minimizer: Field,
    pub nu: f64,
    /// `‖Au - νu^p‖_{L²}` at the returned minimizer.
    pub residual_l2: f64,
    pub iters: usize,
    pub converged: bool,
    /// Quotient after every accepted descent step, starting with the initial field.
    pub energy_trace: Vec<f64>,
    pub stop_reason: StopReason,
    pub newton_steps: usize,
    /// Set when the Newton stage was requested but abandoned.
    pub refine_fallback: Option<String>,
}

fn bump(x: &[f64]) -> f64 {
    (-x.iter().map(|v| v * v).sum::<f64>()).exp()
}

/// Smooth deterministic perturbation with `max |η| = 1`.
fn smooth_noise(grid: Grid, seed: u64) -> Field {
    const MODES: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let modes: Vec<([f64; 2], f64, f64)> = (0..MODES)
        .map(|_| {
            let mut k = [0.0; 2];
            for kk in k.iter_mut().take(dim) {
                *kk = rng.gen_range(-3.0..3.0);
            }
            (k, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let eta = Field::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(k, phase, amp)| {
                let arg: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                amp * (arg + phase).cos()
            })
            .sum()
    });
    let m = eta.max_abs();
    if m > 0.0 {
        eta.scaled(1.0 / m)
    } else {
        eta
    }
}

/// Initial field. `random_positive` is `e^{-|x|²}(1 + 0.3η)` clipped below at
/// `0.1·e^{-|x|²}`, with `η` a seeded smooth perturbation. `warm_start`
/// copies `warm`.
pub fn init_field(grid: Grid, kind: InitKind, seed: u64, warm: Option<&Field>) -> Result<Field> {
    match kind {
        InitKind::GaussianBump => Ok(Field::from_fn(grid, bump)),
        InitKind::RandomPositive => {
            let b = Field::from_fn(grid, bump);
            let eta = smooth_noise(grid, seed);
            Ok(b.zip_map(&eta, |bv, e| (bv * (1.0 + 0.3 * e)).max(0.1 * bv)))
        }
        InitKind::WarmStart => {
            let w = warm.ok_or_else(|| {
                Error::SolverConfiguration("warm_start requires an initial field".to_string())
            })?;
            w.ensure_same_grid(&grid)?;
            w.ensure_finite("warm start")?;
            Ok(w.clone())
        }
    }
}

fn normalize(u: &Field, p: f64) -> Option<Field> {
    let n = u.lp_norm(p + 1.0);
    (n > 0.0 && n.is_finite()).then(|| u.scaled(1.0 / n))
}

fn project(u: &Field, p: f64, radial: bool) -> Option<Field> {
    let mut v = u.map(|x| x.max(0.0));
    if radial {
        v = v.symmetrize();
    }
    normalize(&v, p)
}

struct Evaluated {
    u: Field,
    q: f64,
    residual: Field,
}

fn evaluate(f: &Functional<'_>, u: Field) -> Result<Evaluated> {
    let p = f.params().p();
    let au = f.apply_linear(&u)?;
    let q = au.dot(&u);
    let residual = au.zip_map(&u, |a, v| a - q * positive_power(v.max(0.0), p));
    Ok(Evaluated { u, q, residual })
}

/// Projected preconditioned descent for `ν(V_ε)` from the field selected by
/// `cfg.init_kind`.
pub fn minimize_rayleigh(params: &ProblemParams, op: &FracLapOperator, cfg: &SolverConfig) -> Result<SolveResult> {
    minimize_rayleigh_from(params, op, cfg, None, None)
}

/// As [`minimize_rayleigh`], with an optional warm-start field and a
/// cooperative stop flag checked between iterations.
pub fn minimize_rayleigh_from(
    params: &ProblemParams,
    op: &FracLapOperator,
    cfg: &SolverConfig,
    warm: Option<&Field>,
    stop: Option<&AtomicBool>,
) -> Result<SolveResult> {
    cfg.validate()?;
    if !params.is_subcritical() {
        return Err(Error::Supercritical(format!(
            "p = {} for N = {}, s = {}",
            params.p(),
            params.dim(),
            params.s()
        )));
    }
    let f = Functional::new(params, op)?;
    let p = params.p();
    let grid = *op.grid();
    let shift = f.potential().integral() / (2.0 * grid.half_width()).powi(grid.dim() as i32);

    let start = init_field(grid, cfg.init_kind, cfg.rng_seed, warm)?;
    if !start.is_finite() {
        return Err(Error::SolverConfiguration("initial field is not finite".to_string()));
    }
    let start = project(&start, p, cfg.radial_class).ok_or_else(|| {
        Error::SolverConfiguration("initial field vanishes after projection".to_string())
    })?;
    let mut cur = evaluate(&f, start)?;
    if !(cur.q.is_finite() && cur.q <= MAX_INITIAL_QUOTIENT) {
        return Err(Error::SolverConfiguration(format!(
            "initial quotient {:e} exceeds {MAX_INITIAL_QUOTIENT:e}; check box size and resolution",
            cur.q
        )));
    }

    let mut trace = vec![cur.q];
    let mut tau = cfg.step;
    let tau_max = 10.0 * cfg.step;
    let mut stalled = 0;
    let mut iters = 0;
    let mut reason = StopReason::MaxIters;
    let mut res_norm = cur.residual.l2_norm();

    while iters < cfg.max_iters {
        if res_norm <= cfg.tol_residual {
            reason = StopReason::Residual;
            break;
        }
        if let Some(flag) = stop {
            if flag.load(Ordering::Relaxed) {
                return Err(Error::Cancelled(iters));
            }
        }
        iters += 1;
        let grad = op.resolvent(&cur.residual, shift)?;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = cur.u.clone();
            trial.axpy(-tau, &grad);
            if let Some(t) = project(&trial, p, cfg.radial_class) {
                let ev = evaluate(&f, t)?;
                if ev.q.is_finite() && ev.q <= cur.q {
                    accepted = Some(ev);
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some(next) = accepted else {
            reason = StopReason::LineSearch;
            break;
        };
        let decrease = (cur.q - next.q) / cur.q;
        cur = next;
        trace.push(cur.q);
        res_norm = cur.residual.l2_norm();
        tau = (tau * 1.5).min(tau_max);
        if decrease <= cfg.tol_stall {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                reason = StopReason::Stall;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    if reason == StopReason::MaxIters && res_norm <= cfg.tol_residual {
        reason = StopReason::Residual;
    }
    if cur.u.max_value() <= 0.0 {
        return Err(Error::SolverConfiguration(
            "iterate collapsed to the zero field".to_string(),
        ));
    }

    let mut result = SolveResult {
        nu: cur.q,
        residual_l2: res_norm,
        iters,
        converged: res_norm <= cfg.tol_residual,
        energy_trace: trace,
        stop_reason: reason,
        newton_steps: 0,
        refine_fallback: None,
        minimizer: cur.u,
    };

    if cfg.refine {
        if result.residual_l2 > NEWTON_ENTRY_RESIDUAL {
            result.refine_fallback = Some(format!(
                "descent residual {:.3e} above Newton entry level {NEWTON_ENTRY_RESIDUAL:e}",
                result.residual_l2
            ));
        } else {
            match newton_refine(&result.minimizer, params, op, result.nu, cfg) {
                Ok(r) if r.residual_l2 <= result.residual_l2 => {
                    result.minimizer = r.minimizer;
                    result.nu = r.nu;
                    result.residual_l2 = r.residual_l2;
                    result.newton_steps = r.newton_steps;
                    result.converged = r.residual_l2 <= cfg.tol_residual;
                    result.refine_fallback = r.refine_fallback;
                }
                Ok(r) => {
                    result.refine_fallback = Some(format!(
                        "Newton stage did not improve the residual ({:.3e})",
                        r.residual_l2
                    ));
                }
                Err(e) => result.refine_fallback = Some(e.to_string()),
            }
        }
    }
    Ok(result)
}

/// Damped Newton iteration on `Au = ν₀u^p` from `u0`, finished by the
/// rescaling `U = u/‖u‖_{p+1}`, `ν = Q(U)`.
///
/// A stagnating inner solve ends the iteration early; the best iterate so far
/// is returned with the reason in `refine_fallback`.
pub fn newton_refine(
    u0: &Field,
    params: &ProblemParams,
    op: &FracLapOperator,
    nu0: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let f = Functional::new(params, op)?;
    let p = params.p();
    let grid = *op.grid();
    u0.ensure_same_grid(&grid)?;
    let shift = f.potential().integral() / (2.0 * grid.half_width()).powi(grid.dim() as i32);
    let mut u = u0.map(|x| x.max(0.0));
    let fixed = |u: &Field| -> Result<Field> {
        let au = f.apply_linear(u)?;
        Ok(au.zip_map(u, |a, v| a - nu0 * positive_power(v.max(0.0), p)))
    };
    let mut fu = fixed(&u)?;
    let mut fnorm = fu.l2_norm();
    let mut steps = 0;
    let mut fallback = None;

    while steps < NEWTON_MAX_STEPS && fnorm > 0.0 {
        let weight = f.hessian_weight(&u, nu0);
        let apply_h = |v: &[f64]| -> Result<Vec<f64>> {
            let fv = Field::from_parts(grid, v.to_vec());
            let hv = f.apply_linear(&fv)?.zip_map(&fv.mul(&weight), |a, b| a - b);
            Ok(hv.into_values())
        };
        let apply_m = |v: &[f64]| -> Result<Vec<f64>> {
            Ok(op.resolvent(&Field::from_parts(grid, v.to_vec()), shift)?.into_values())
        };
        let rhs: Vec<f64> = fu.values().iter().map(|v| -v).collect();
        let out = minres(apply_h, apply_m, &rhs, NEWTON_INNER_RTOL, NEWTON_INNER_MAX_ITERS)?;
        if !out.converged {
            fallback = Some(
                Error::LinearSolveStagnated {
                    iterations: out.iterations,
                    relative_residual: out.relative_residual,
                }
                .to_string(),
            );
            break;
        }
        let mut delta = Field::from_parts(grid, out.solution);
        if cfg.radial_class {
            delta = delta.symmetrize();
        }
        let mut t = 1.0;
        let mut improved = None;
        for _ in 0..12 {
            let mut trial = u.clone();
            trial.axpy(t, &delta);
            let trial = trial.map(|x| x.max(0.0));
            let ft = fixed(&trial)?;
            let n = ft.l2_norm();
            if n < fnorm {
                improved = Some((trial, ft, n));
                break;
            }
            t *= 0.5;
        }
        let Some((nu_, nf, nn)) = improved else {
            break;
        };
        steps += 1;
        u = nu_;
        fu = nf;
        fnorm = nn;
    }

    let minimizer = normalize(&u, p).ok_or(Error::ZeroField)?;
    let ev = evaluate(&f, minimizer)?;
    let residual_l2 = ev.residual.l2_norm();
    Ok(SolveResult {
        minimizer: ev.u,
        nu: ev.q,
        residual_l2,
        iters: 0,
        converged: residual_l2 <= cfg.tol_residual,
        energy_trace: vec![ev.q],
        stop_reason: StopReason::Residual,
        newton_steps: steps,
        refine_fallback: fallback,
    })
}

/// Constant-potential ground state `Ũ_λ`, recentred so its maximum sits at
/// the origin node.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub result: SolveResult,
    /// Translation applied by the recentring.
    pub shift: [f64; 2],
    /// Relative `L²` change made by the square-symmetry averaging (2D only).
    pub symmetry_correction: f64,
    pub symmetry_flag: bool,
}

/// Solves `ν(λ)` and recentres the minimizer at the origin. In 2D the result
/// is then averaged over the symmetries of the square; if that changes it by
/// more than [`SYMMETRY_FLAG_THRESHOLD`] relative, `symmetry_flag` is raised.
pub fn ground_state_constant(
    lambda: f64,
    dim: usize,
    s: f64,
    p: f64,
    grid: Grid,
    cfg: &SolverConfig,
) -> Result<GroundState> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let origin = vec![0.0; dim];
    let params = ProblemParams::new(dim, s, p, 1.0, &origin, Potential::constant(lambda, dim)?)?;
    let op = FracLapOperator::new(grid, s)?;
    let mut result = minimize_rayleigh(&params, &op, cfg)?;
    let (centred, shift) = recenter(&result.minimizer, op.transform())?;
    let mut u = centred.map(|x| x.max(0.0));
    let mut correction = 0.0;
    if dim == 2 {
        let sym = u.symmetrize();
        correction = sym.sub(&u).l2_norm() / u.l2_norm();
        u = sym;
    }
    let f = Functional::new(&params, &op)?;
    let ev = evaluate(&f, normalize(&u, p).ok_or(Error::ZeroField)?)?;
    result.minimizer = ev.u;
    result.nu = ev.q;
    result.residual_l2 = ev.residual.l2_norm();
    result.converged = result.converged && result.residual_l2 <= cfg.tol_residual;
    Ok(GroundState {
        result,
        shift,
        symmetry_correction: correction,
        symmetry_flag: correction > SYMMETRY_FLAG_THRESHOLD,
    })
}
