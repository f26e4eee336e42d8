//! Multi-start uniqueness probe.

use crate::analysis::hs_distance;
use crate::analysis::maximizer::recenter;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::ProblemParams;
use crate::operator::FracLapOperator;
use crate::solver::{minimize_rayleigh, InitKind, SolverConfig};

/// Largest pairwise aligned distance regarded as "the same minimizer".
pub const UNIQUENESS_THRESHOLD: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct MultistartReport {
    pub seeds: Vec<u64>,
    pub nus: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    /// Largest `H^s` distance between maximizer-aligned minimizers.
    pub max_pairwise_gap: f64,
    pub all_converged: bool,
    /// `gap ≤ UNIQUENESS_THRESHOLD`; withheld unless every run converged.
    pub unique: Option<bool>,
}

/// Solves from `k` `random_positive` starts with seeds `seed, seed+1, …`.
/// Other solver settings, including the radial-class restriction, come from `cfg`.
pub fn multistart_uniqueness(
    params: &ProblemParams,
    op: &FracLapOperator,
    cfg: &SolverConfig,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<MultistartReport> {
    if k < 3 {
        return Err(Error::Diagnostic(format!("multi-start needs k >= 3, got {k}")));
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| seed.wrapping_add(i)).collect();
    let runs = exec.map(seeds.clone(), |sd| {
        let run_cfg = SolverConfig {
            init_kind: InitKind::RandomPositive,
            rng_seed: sd,
            ..cfg.clone()
        };
        let r = minimize_rayleigh(params, op, &run_cfg)?;
        let (aligned, _) = recenter(&r.minimizer, op.transform())?;
        Ok((r, aligned))
    });
    let runs: Vec<_> = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut gap: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            gap = gap.max(hs_distance(&runs[i].1, &runs[j].1, op)?);
        }
    }
    let converged: Vec<bool> = runs.iter().map(|(r, _)| r.converged).collect();
    let all_converged = converged.iter().all(|&c| c);
    Ok(MultistartReport {
        seeds,
        nus: runs.iter().map(|(r, _)| r.nu).collect(),
        residuals: runs.iter().map(|(r, _)| r.residual_l2).collect(),
        converged,
        max_pairwise_gap: gap,
        all_converged,
        unique: all_converged.then_some(gap <= UNIQUENESS_THRESHOLD),
    })
}
