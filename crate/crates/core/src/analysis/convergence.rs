//! Convergence of `ν(V_ε)` to `ν(Ṽ)` and of the aligned profile to `Ũ`.

use crate::analysis::hs_distance;
use crate::analysis::maximizer::recenter;
use crate::analysis::sweep::SweepReport;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operator::FracLapOperator;

/// Outcome of a monotonicity check over the converged entries of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Trend {
    pub pass: bool,
    /// First adjacent pair (indices into the full sequence) that breaks the trend.
    pub offending: Option<(usize, usize)>,
    /// Indices that took part in the check.
    pub used: Vec<usize>,
}

/// Checks that the entries with `included[i]` and a value form a strictly
/// decreasing sequence. Needs at least two such entries.
pub fn strictly_decreasing(values: &[Option<f64>], included: &[bool]) -> Trend {
    let used: Vec<usize> = (0..values.len())
        .filter(|&i| included.get(i).copied().unwrap_or(false) && values[i].is_some_and(f64::is_finite))
        .collect();
    let offending = used
        .windows(2)
        .find(|w| values[w[1]].unwrap() >= values[w[0]].unwrap())
        .map(|w| (w[0], w[1]));
    Trend {
        pass: used.len() >= 2 && offending.is_none(),
        offending,
        used,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NuConvergence {
    /// `|ν(V_ε) - ν(Ṽ)|` per entry; `None` for non-converged entries.
    pub gaps: Vec<Option<f64>>,
    pub trend: Trend,
    pub last_gap: f64,
    pub below_threshold: bool,
    pub pass: bool,
}

/// Gaps `|ν(V_ε) - ν_limit|` over the converged entries of `report`, checked
/// for strict decrease, with the last one below `threshold`.
pub fn nu_convergence(report: &SweepReport, nu_limit: f64, threshold: f64) -> Result<NuConvergence> {
    let converged = report.converged_flags.iter().filter(|&&c| c).count();
    if converged < 3 {
        return Err(Error::Diagnostic(format!(
            "nu convergence needs at least 3 converged entries, got {converged}"
        )));
    }
    let gaps: Vec<Option<f64>> = report
        .nu_list
        .iter()
        .zip(&report.converged_flags)
        .map(|(nu, &c)| c.then(|| (nu - nu_limit).abs()))
        .collect();
    let trend = strictly_decreasing(&gaps, &report.converged_flags);
    let last_gap = trend.used.last().and_then(|&i| gaps[i]).unwrap_or(f64::INFINITY);
    let below_threshold = last_gap <= threshold;
    Ok(NuConvergence {
        pass: trend.pass && below_threshold,
        gaps,
        trend,
        last_gap,
        below_threshold,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileGap {
    pub gap: f64,
    /// Maximizer of `v` that was translated to the origin.
    pub shift: [f64; 2],
    /// Raised when the shift exceeds `L/2` along some axis.
    pub wrap_flag: bool,
}

/// `‖v(· + shift) - Ũ‖_{H^s}` with `shift` the refined maximizer of `v`.
/// `u_tilde` must already be centred at the origin.
pub fn profile_gap(v: &Field, u_tilde: &Field, op: &FracLapOperator) -> Result<ProfileGap> {
    v.ensure_same_grid(op.grid())?;
    u_tilde.ensure_same_grid(op.grid())?;
    let (aligned, shift) = recenter(v, op.transform())?;
    let l = op.grid().half_width();
    let wrap_flag = shift[..op.grid().dim()].iter().any(|c| c.abs() > 0.5 * l);
    Ok(ProfileGap {
        gap: hs_distance(&aligned, u_tilde, op)?,
        shift,
        wrap_flag,
    })
}
