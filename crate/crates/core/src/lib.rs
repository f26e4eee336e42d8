//! Ground states of the semiclassical fractional Schrödinger equation
//!
//! ```text
//! eps^{2s} (-Δ)^s u + V(x) u = u^p      in R^N,  N ∈ {1, 2}
//! ```
//!
//! computed on a periodic box as constrained minimizers of the Rayleigh
//! quotient `(‖u‖²_D + ∫V_eps u²) / ‖u‖²_{L^{p+1}}` in the rescaled frame
//! `V_eps(x) = V(eps·x + x0)`, together with diagnostics that check
//! concentration, decay, convergence, orthogonality, coercivity and
//! uniqueness properties of those minimizers.
//!
//! Module map:
//!
//! * [`grid`] – periodic lattice and sampled fields.
//! * [`spectral`] – discrete Fourier transforms, spectral derivatives and shifts.
//! * [`operator`] – the fractional Laplacian as a Fourier multiplier.
//! * [`quadrature`] – the singular-integral form, used as an independent oracle.
//! * [`model`] – potentials, problem parameters, quotient, energy, residual.
//! * [`solver`] – projected descent, Newton refinement, constant-potential ground states.
//! * [`analysis`] – maximizer, decay, criticality, convergence, orthogonality,
//!   coercivity and multi-start diagnostics, plus the ε-sweep driver.
//! * [`exec`] – sequential / data-parallel execution policy.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod grid;
pub mod krylov;
pub mod model;
pub mod operator;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{Field, Grid};
pub use model::{Potential, ProblemParams};
pub use operator::FracLapOperator;
pub use solver::{SolveResult, SolverConfig};
