//! Diagnostics on computed minimizers.
//!
//! Everything here is a pure function of fields and parameters except the
//! multi-start and sweep drivers, which call the solver.

pub mod coercivity;
pub mod convergence;
pub mod criticality;
pub mod decay;
pub mod maximizer;
pub mod multistart;
pub mod orthogonality;
pub mod sweep;

pub use coercivity::{coercivity_check, CoercivityReport, ProjectionBasis};
pub use convergence::{nu_convergence, profile_gap, strictly_decreasing, NuConvergence, ProfileGap, Trend};
pub use criticality::{criticality_norm, criticality_residual};
pub use decay::{decay_fit, default_window, DecayFit};
pub use maximizer::{locate_maximizer, recenter, refine_maximum, Maximizer};
pub use multistart::{multistart_uniqueness, MultistartReport};
pub use orthogonality::{orthogonality_diagnostics, Orthogonality};
pub use sweep::{run_sweep, sweep_verdicts, SweepEntry, SweepOutcome, SweepReport, SweepVerdicts};

use crate::error::Result;
use crate::grid::Field;
use crate::operator::FracLapOperator;

/// `‖a - b‖_{H^s}` with `‖·‖²_{H^s} = ‖·‖²_{L²} + ‖·‖²_{D^{s,2}}`.
pub fn hs_distance(a: &Field, b: &Field, op: &FracLapOperator) -> Result<f64> {
    op.hs_norm_sq(&a.sub(b)).map(f64::sqrt)
}
