//! The ε-sweep: one solve plus diagnostics per ε, run concurrently and
//! collected in input order.

use crate::analysis::convergence::{profile_gap, strictly_decreasing, Trend};
use crate::analysis::criticality::{criticality_norm, criticality_residual};
use crate::analysis::decay::{decay_fit, default_window};
use crate::analysis::maximizer::refine_maximum;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{Field, Grid};
use crate::model::ProblemParams;
use crate::operator::FracLapOperator;
use crate::solver::{ground_state_constant, minimize_rayleigh, GroundState, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub eps: f64,
    pub nu: f64,
    /// `x₀ + ε·m` with `m` the refined rescaled-frame maximizer.
    pub maximizer: Vec<f64>,
    pub decay_slope: Option<f64>,
    pub decay_r2: Option<f64>,
    pub criticality: Vec<f64>,
    pub criticality_norm: f64,
    pub profile_gap: f64,
    pub residual_l2: f64,
    pub iters: usize,
    pub converged: bool,
    /// Rescaled-frame minimizer `v_ε`.
    pub minimizer: Field,
}

/// Column-oriented view of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub eps_list: Vec<f64>,
    pub nu_list: Vec<f64>,
    pub maximizer_list: Vec<Vec<f64>>,
    pub decay_slope_list: Vec<Option<f64>>,
    pub criticality_list: Vec<f64>,
    pub profile_gap_list: Vec<f64>,
    pub converged_flags: Vec<bool>,
}

impl SweepReport {
    pub fn from_entries(entries: &[SweepEntry]) -> Self {
        Self {
            eps_list: entries.iter().map(|e| e.eps).collect(),
            nu_list: entries.iter().map(|e| e.nu).collect(),
            maximizer_list: entries.iter().map(|e| e.maximizer.clone()).collect(),
            decay_slope_list: entries.iter().map(|e| e.decay_slope).collect(),
            criticality_list: entries.iter().map(|e| e.criticality_norm).collect(),
            profile_gap_list: entries.iter().map(|e| e.profile_gap).collect(),
            converged_flags: entries.iter().map(|e| e.converged).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub entries: Vec<SweepEntry>,
    pub report: SweepReport,
    /// `ν(Ṽ)` and `Ũ` on the sweep grid, `Ṽ = inf V`.
    pub limit: GroundState,
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("eps_list is empty".to_string()));
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "eps_list entries must be positive, got {eps_list:?}"
        )));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "eps_list must be strictly decreasing, got {eps_list:?}"
        )));
    }
    Ok(())
}

/// Solves `ν(V_ε)` for every `ε` in `eps_list` (strictly decreasing) and the
/// limit problem `ν(inf V)`, then evaluates maximizer, decay, criticality and
/// profile gap per entry.
pub fn run_sweep(
    base: &ProblemParams,
    grid: Grid,
    cfg: &SolverConfig,
    eps_list: &[f64],
    exec: Execution,
) -> Result<SweepOutcome> {
    check_eps_list(eps_list)?;
    let limit = ground_state_constant(
        base.potential().infimum(),
        base.dim(),
        base.s(),
        base.p(),
        grid,
        cfg,
    )?;
    let op = FracLapOperator::new(grid, base.s())?;
    let u_tilde = &limit.result.minimizer;
    let dim = base.dim();
    let window = default_window(grid.half_width());

    let entries = exec.map(eps_list.to_vec(), |eps| -> Result<SweepEntry> {
        let params = base.with_eps(eps)?;
        let r = minimize_rayleigh(&params, &op, cfg)?;
        let v: &Field = &r.minimizer;
        let m = refine_maximum(v, op.transform())?;
        let maximizer: Vec<f64> = (0..dim).map(|i| params.x0()[i] + eps * m[i]).collect();
        let fit = decay_fit(v, window).ok();
        let criticality = criticality_residual(v, &params);
        Ok(SweepEntry {
            eps,
            nu: r.nu,
            maximizer,
            decay_slope: fit.as_ref().map(|d| d.slope),
            decay_r2: fit.as_ref().map(|d| d.r2_stat),
            criticality_norm: criticality_norm(&criticality),
            criticality,
            profile_gap: profile_gap(v, u_tilde, &op)?.gap,
            residual_l2: r.residual_l2,
            iters: r.iters,
            converged: r.converged,
            minimizer: r.minimizer,
        })
    });
    let entries: Vec<SweepEntry> = entries.into_iter().collect::<Result<_>>()?;
    Ok(SweepOutcome {
        report: SweepReport::from_entries(&entries),
        entries,
        limit,
    })
}

/// Trend assertions for a concentration sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepVerdicts {
    pub nu_gap: Trend,
    pub criticality: Trend,
    pub profile_gap: Trend,
    /// `C = max dᵢ/εᵢ` over the two finest converged entries.
    pub concentration_constant: f64,
    /// Every converged `dᵢ ≤ C εᵢ + 2hᵢ` and the finest within `2h` of `C ε`.
    pub concentration_pass: bool,
    pub distances: Vec<f64>,
}

/// Evaluates the four sweep trends against `nu_limit` and the target point.
/// `h` is the rescaled grid spacing, so `ε·h` is the physical resolution.
pub fn sweep_verdicts(report: &SweepReport, nu_limit: f64, target: &[f64], h: f64) -> SweepVerdicts {
    let conv = &report.converged_flags;
    let gaps: Vec<Option<f64>> = report.nu_list.iter().map(|nu| Some((nu - nu_limit).abs())).collect();
    let crit: Vec<Option<f64>> = report.criticality_list.iter().map(|&c| Some(c)).collect();
    let prof: Vec<Option<f64>> = report.profile_gap_list.iter().map(|&c| Some(c)).collect();
    let distances: Vec<f64> = report
        .maximizer_list
        .iter()
        .map(|m| m.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let used: Vec<usize> = (0..conv.len()).filter(|&i| conv[i]).collect();
    let (constant, pass) = if used.len() >= 2 {
        let finest = used[used.len() - 1];
        let second = used[used.len() - 2];
        let c = (distances[finest] / report.eps_list[finest]).max(distances[second] / report.eps_list[second]);
        let within = |i: usize| distances[i] <= c * report.eps_list[i] + 2.0 * h * report.eps_list[i];
        let finest_ok =
            (distances[finest] - c * report.eps_list[finest]).abs() <= 2.0 * h * report.eps_list[finest];
        (c, used.iter().all(|&i| within(i)) && finest_ok)
    } else {
        (f64::NAN, false)
    };
    SweepVerdicts {
        nu_gap: strictly_decreasing(&gaps, conv),
        criticality: strictly_decreasing(&crit, conv),
        profile_gap: strictly_decreasing(&prof, conv),
        concentration_constant: constant,
        concentration_pass: pass,
        distances,
    }
}
