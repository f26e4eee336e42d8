//! Potentials, problem parameters and the variational quantities built on
//! them: the Rayleigh quotient in the rescaled frame, the energy, the
//! Euler–Lagrange residual, the second variation, and the transfer between
//! the rescaled and physical frames.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operator::FracLapOperator;

/// Entries at or below this level are treated as zero by `u^p`.
pub const POWER_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialFamily {
    Constant,
    SmoothWell,
    RadialDecreasing,
    DoubleWell,
}

impl PotentialFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::SmoothWell => "smooth_well",
            Self::RadialDecreasing => "radial_decreasing",
            Self::DoubleWell => "double_well",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(Self::Constant),
            "smooth_well" => Some(Self::SmoothWell),
            "radial_decreasing" => Some(Self::RadialDecreasing),
            "double_well" => Some(Self::DoubleWell),
            _ => None,
        }
    }
}

/// One of four analytic potential families, all smooth, bounded and bounded
/// below by a positive constant:
///
/// * `constant[λ]`: `V ≡ λ`;
/// * `smooth_well[c…]`: `V = 1 + |x-c|²/(1+|x-c|²)`, unique minimum at `c`;
/// * `radial_decreasing`: `V = 1 + 1/(1+|x|²)`;
/// * `double_well[a]`: `V = 1 + (|x|²-a²)²/(1+|x|⁴)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    family: PotentialFamily,
    params: Vec<f64>,
    dim: usize,
}

impl Potential {
    /// Validates `params` for the family in dimension `dim`. An empty
    /// `smooth_well` parameter list centres the well at the origin.
    pub fn new(family: PotentialFamily, params: Vec<f64>, dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{} parameters must be finite",
                family.name()
            )));
        }
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let params = match family {
            PotentialFamily::Constant => {
                if params.len() != 1 || params[0] <= 0.0 {
                    return bad(format!(
                        "constant takes one positive level λ (inf V > 0), got {params:?}"
                    ));
                }
                params
            }
            PotentialFamily::SmoothWell => match params.len() {
                0 => vec![0.0; dim],
                l if l == dim => params,
                l => {
                    return bad(format!(
                        "smooth_well takes a centre with {dim} coordinates, got {l}"
                    ))
                }
            },
            PotentialFamily::RadialDecreasing => {
                if !params.is_empty() {
                    return bad(format!("radial_decreasing takes no parameters, got {params:?}"));
                }
                params
            }
            PotentialFamily::DoubleWell => {
                if params.len() != 1 || params[0] < 0.0 {
                    return bad(format!(
                        "double_well takes one non-negative radius a, got {params:?}"
                    ));
                }
                params
            }
        };
        Ok(Self {
            family,
            params,
            dim,
        })
    }

    pub fn constant(lambda: f64, dim: usize) -> Result<Self> {
        Self::new(PotentialFamily::Constant, vec![lambda], dim)
    }

    pub fn smooth_well(center: &[f64]) -> Result<Self> {
        Self::new(PotentialFamily::SmoothWell, center.to_vec(), center.len())
    }

    pub fn radial_decreasing(dim: usize) -> Result<Self> {
        Self::new(PotentialFamily::RadialDecreasing, Vec::new(), dim)
    }

    pub fn double_well(a: f64, dim: usize) -> Result<Self> {
        Self::new(PotentialFamily::DoubleWell, vec![a], dim)
    }

    pub fn family(&self) -> PotentialFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn centered_sq(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let mut d = [0.0; 2];
        let mut r2 = 0.0;
        for i in 0..self.dim {
            let c = if self.family == PotentialFamily::SmoothWell {
                self.params[i]
            } else {
                0.0
            };
            d[i] = x[i] - c;
            r2 += d[i] * d[i];
        }
        (r2, d)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (r2, _) = self.centered_sq(x);
        match self.family {
            PotentialFamily::Constant => self.params[0],
            PotentialFamily::SmoothWell => 1.0 + r2 / (1.0 + r2),
            PotentialFamily::RadialDecreasing => 1.0 + 1.0 / (1.0 + r2),
            PotentialFamily::DoubleWell => {
                let a2 = self.params[0] * self.params[0];
                1.0 + (r2 - a2).powi(2) / (1.0 + r2 * r2)
            }
        }
    }

    /// Derivative of the radial profile with respect to `q = |x-c|²`.
    fn profile_slope(&self, q: f64) -> f64 {
        match self.family {
            PotentialFamily::Constant => 0.0,
            PotentialFamily::SmoothWell => 1.0 / (1.0 + q).powi(2),
            PotentialFamily::RadialDecreasing => -1.0 / (1.0 + q).powi(2),
            PotentialFamily::DoubleWell => {
                let a2 = self.params[0] * self.params[0];
                let den = 1.0 + q * q;
                (2.0 * (q - a2) * den - 2.0 * q * (q - a2).powi(2)) / (den * den)
            }
        }
    }

    /// `∇V(x)`; unused components are zero.
    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        let (r2, d) = self.centered_sq(x);
        let g = 2.0 * self.profile_slope(r2);
        [g * d[0], g * d[1]]
    }

    /// `inf V` over `R^N`.
    pub fn infimum(&self) -> f64 {
        match self.family {
            PotentialFamily::Constant => self.params[0],
            _ => 1.0,
        }
    }

    /// `sup |∇V|` over `R^N`, from the radial profile `2r·|dV/dq|`.
    pub fn gradient_sup(&self) -> f64 {
        match self.family {
            PotentialFamily::Constant => 0.0,
            // 2r/(1+r²)² peaks at r = 1/√3
            PotentialFamily::SmoothWell | PotentialFamily::RadialDecreasing => {
                9.0 / (8.0 * 3f64.sqrt())
            }
            PotentialFamily::DoubleWell => {
                let reach = 4.0 * (1.0 + self.params[0]);
                let samples = 200_000;
                (0..=samples)
                    .map(|i| {
                        let r = reach * i as f64 / samples as f64;
                        (2.0 * r * self.profile_slope(r * r)).abs()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// The constant potential at level `inf V`.
    pub fn limit_constant(&self) -> Potential {
        Potential {
            family: PotentialFamily::Constant,
            params: vec![self.infimum()],
            dim: self.dim,
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}[{}]", self.family.name(), params.join(", "))
    }
}

/// `true` iff `1 < p` and, when `N > 2s`, `p < (N+2s)/(N-2s)`. For `N ≤ 2s`
/// every `p > 1` is subcritical.
pub fn check_subcritical(dim: usize, s: f64, p: f64) -> bool {
    if !(p > 1.0 && p.is_finite()) {
        return false;
    }
    let n = dim as f64;
    if n > 2.0 * s {
        p < (n + 2.0 * s) / (n - 2.0 * s)
    } else {
        true
    }
}

/// `(N, s, p, ε, x₀, V)`: one instance of the problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemParams {
    dim: usize,
    s: f64,
    p: f64,
    eps: f64,
    x0: [f64; 2],
    potential: Potential,
}

impl ProblemParams {
    /// `ε = 0` is accepted and freezes the potential at `V(x₀)`.
    pub fn new(dim: usize, s: f64, p: f64, eps: f64, x0: &[f64], potential: Potential) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fractional order s must lie in (0, 1], got {s}"
            )));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "semiclassical parameter eps must be finite and non-negative, got {eps}"
            )));
        }
        if x0.len() != dim || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reference point x0 must have {dim} finite coordinates, got {x0:?}"
            )));
        }
        if potential.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "potential is {}-dimensional, problem is {dim}-dimensional",
                potential.dim()
            )));
        }
        if !check_subcritical(dim, s, p) {
            let n = dim as f64;
            let bound = if n > 2.0 * s {
                format!("p < (N+2s)/(N-2s) = {}", (n + 2.0 * s) / (n - 2.0 * s))
            } else {
                "p > 1".to_string()
            };
            return Err(Error::Supercritical(format!(
                "need 1 < p and {bound} for N = {dim}, s = {s}; got p = {p}"
            )));
        }
        let mut pt = [0.0; 2];
        pt[..dim].copy_from_slice(x0);
        Ok(Self {
            dim,
            s,
            p,
            eps,
            x0: pt,
            potential,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0[..self.dim]
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn is_subcritical(&self) -> bool {
        check_subcritical(self.dim, self.s, self.p)
    }

    /// Same problem with a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.dim, self.s, self.p, eps, self.x0(), self.potential.clone())
    }

    /// Same problem with `V` replaced by the constant `inf V`.
    pub fn limit_problem(&self) -> Self {
        Self {
            potential: self.potential.limit_constant(),
            ..self.clone()
        }
    }

    fn physical_point(&self, x: &[f64]) -> [f64; 2] {
        let mut y = [0.0; 2];
        for i in 0..self.dim {
            y[i] = self.eps * x[i] + self.x0[i];
        }
        y
    }

    /// `V_ε(x) = V(εx + x₀)`.
    pub fn rescaled_potential(&self, x: &[f64]) -> f64 {
        self.potential.value(&self.physical_point(x)[..self.dim])
    }

    /// `(∇V)(εx + x₀)`.
    pub fn rescaled_gradient(&self, x: &[f64]) -> [f64; 2] {
        self.potential.gradient(&self.physical_point(x)[..self.dim])
    }

    pub fn rescaled_potential_field(&self, grid: Grid) -> Field {
        Field::from_fn(grid, |x| self.rescaled_potential(x))
    }

    /// `(N+2s)`: the expected algebraic decay rate of ground states.
    pub fn decay_rate(&self) -> f64 {
        self.dim as f64 + 2.0 * self.s
    }
}

/// `u^p` for `u ≥ 0`, zero at or below [`POWER_FLOOR`].
pub fn positive_power(u: f64, p: f64) -> f64 {
    if u <= POWER_FLOOR {
        0.0
    } else if p.fract() == 0.0 && p.abs() < 64.0 {
        u.powi(p as i32)
    } else {
        (p * u.ln()).exp()
    }
}

fn check_nonnegative(u: &Field) -> Result<()> {
    let floor = -1e-12 * u.max_abs().max(f64::MIN_POSITIVE);
    if u.min_value() < floor {
        return Err(Error::InvalidParameter(format!(
            "field must be non-negative, minimum is {:e}",
            u.min_value()
        )));
    }
    Ok(())
}

/// The rescaled-frame functional for fixed `(params, operator)`, with `V_ε`
/// sampled once on the operator's grid.
#[derive(Clone, Debug)]
pub struct Functional<'a> {
    params: &'a ProblemParams,
    op: &'a FracLapOperator,
    potential: Field,
}

impl<'a> Functional<'a> {
    pub fn new(params: &'a ProblemParams, op: &'a FracLapOperator) -> Result<Self> {
        let grid = *op.grid();
        if grid.dim() != params.dim() {
            return Err(Error::GridMismatch {
                expected: format!("{}-dimensional grid", params.dim()),
                found: grid.to_string(),
            });
        }
        if (op.order() - params.s()).abs() > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "operator order {} differs from problem order {}",
                op.order(),
                params.s()
            )));
        }
        Ok(Self {
            params,
            op,
            potential: params.rescaled_potential_field(grid),
        })
    }

    pub fn params(&self) -> &ProblemParams {
        self.params
    }

    pub fn operator(&self) -> &FracLapOperator {
        self.op
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    /// `V_ε` on the grid.
    pub fn potential(&self) -> &Field {
        &self.potential
    }

    /// `‖u‖²_ε = ‖u‖²_D + ∫V_ε u²`.
    pub fn eps_norm_sq(&self, u: &Field) -> Result<f64> {
        let d = self.op.seminorm_sq(u)?;
        Ok(d + self.weighted_l2(u, u))
    }

    fn weighted_l2(&self, u: &Field, w: &Field) -> f64 {
        let sum: f64 = u
            .values()
            .iter()
            .zip(w.values())
            .zip(self.potential.values())
            .map(|((a, b), v)| a * b * v)
            .sum();
        sum * self.grid().cell_measure()
    }

    /// `⟨u, w⟩_ε`.
    pub fn eps_inner(&self, u: &Field, w: &Field) -> Result<f64> {
        Ok(self.op.inner(u, w)? + self.weighted_l2(u, w))
    }

    /// `A u = (-Δ)^s u + V_ε u`.
    pub fn apply_linear(&self, u: &Field) -> Result<Field> {
        let lu = self.op.apply(u)?;
        Ok(lu.zip_map(&u.mul(&self.potential), |a, b| a + b))
    }

    /// `‖u‖²_ε / ‖u‖²_{L^{p+1}}`.
    pub fn quotient(&self, u: &Field) -> Result<f64> {
        u.ensure_same_grid(self.grid())?;
        u.ensure_finite("Rayleigh quotient input")?;
        let denom = u.lp_norm(self.params.p() + 1.0);
        if denom == 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(self.eps_norm_sq(u)? / (denom * denom))
    }

    /// `∫|u|^{p+1}`.
    pub fn potential_energy(&self, u: &Field) -> f64 {
        let q = self.params.p() + 1.0;
        u.values()
            .iter()
            .map(|v| positive_power(v.abs(), q))
            .sum::<f64>()
            * self.grid().cell_measure()
    }

    /// `J(u) = ½‖u‖²_ε - ν/(p+1)·∫|u|^{p+1}`.
    pub fn energy(&self, u: &Field, nu: f64) -> Result<f64> {
        let p = self.params.p();
        Ok(0.5 * self.eps_norm_sq(u)? - nu / (p + 1.0) * self.potential_energy(u))
    }

    /// `(-Δ)^s u + V_ε u - ν u^p`. Requires `u ≥ 0`.
    pub fn el_residual(&self, u: &Field, nu: f64) -> Result<Field> {
        check_nonnegative(u)?;
        let p = self.params.p();
        let au = self.apply_linear(u)?;
        Ok(au.zip_map(u, |a, v| a - nu * positive_power(v.max(0.0), p)))
    }

    /// `J'(u)[φ] = ⟨u, φ⟩_ε - ν∫u^p φ`.
    pub fn gateaux(&self, u: &Field, nu: f64, phi: &Field) -> Result<f64> {
        let p = self.params.p();
        let up = u.map(|v| positive_power(v.max(0.0), p));
        Ok(self.eps_inner(u, phi)? - nu * up.dot(phi))
    }

    /// `pν u^{p-1}`, the nonlinear part of the second variation.
    pub fn hessian_weight(&self, u: &Field, nu: f64) -> Field {
        let p = self.params.p();
        u.map(|v| p * nu * positive_power(v.max(0.0), p - 1.0))
    }

    /// `H v = (-Δ)^s v + V_ε v - pν u^{p-1} v`.
    pub fn hessian_apply(&self, u: &Field, nu: f64, v: &Field) -> Result<Field> {
        let w = self.hessian_weight(u, nu);
        let av = self.apply_linear(v)?;
        Ok(av.zip_map(&v.mul(&w), |a, b| a - b))
    }

    /// `J''(u)[v, w] = ⟨v, w⟩_ε - pν∫u^{p-1} v w`.
    pub fn second_variation(&self, u: &Field, nu: f64, v: &Field, w: &Field) -> Result<f64> {
        let weight = self.hessian_weight(u, nu);
        Ok(self.eps_inner(v, w)? - weight.mul(v).dot(w))
    }
}

/// Physical-frame quotient
/// `ε^{N(1-p)/(1+p)} (ε^{2s}‖u‖²_D + ∫V u²) / ‖u‖²_{L^{p+1}}`
/// with `V` evaluated at the physical coordinates of `op`'s grid.
pub fn physical_quotient(u: &Field, params: &ProblemParams, op: &FracLapOperator) -> Result<f64> {
    let eps = params.eps();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(
            "physical frame requires eps > 0".to_string(),
        ));
    }
    u.ensure_same_grid(op.grid())?;
    let n = params.dim() as f64;
    let p = params.p();
    let v = Field::from_fn(*op.grid(), |x| params.potential().value(x));
    let num = eps.powf(2.0 * params.s()) * op.seminorm_sq(u)? + u.mul(&v).dot(u);
    let den = u.lp_norm(p + 1.0);
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(eps.powf(n * (1.0 - p) / (1.0 + p)) * num / (den * den))
}

/// Minimum number of target nodes per rescaled unit length.
pub const MIN_NODES_PER_WIDTH: f64 = 4.0;

/// `u_ε(x) = v((x - x₀)/ε)` sampled on `target` by cubic interpolation; `v` is
/// extended by zero outside its own box.
///
/// Fails when a rescaled unit length spans fewer than
/// [`MIN_NODES_PER_WIDTH`] target nodes, or when `x₀` lies outside the target box.
pub fn frame_transfer(v: &Field, params: &ProblemParams, target: Grid) -> Result<Field> {
    let eps = params.eps();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(
            "frame transfer requires eps > 0".to_string(),
        ));
    }
    if target.dim() != params.dim() || v.grid().dim() != params.dim() {
        return Err(Error::GridMismatch {
            expected: format!("{}-dimensional grids", params.dim()),
            found: format!("source {}, target {}", v.grid(), target),
        });
    }
    let per_width = eps / target.spacing();
    if per_width < MIN_NODES_PER_WIDTH {
        return Err(Error::Unresolvable(format!(
            "eps = {eps} covers {per_width:.2} target nodes, need at least {MIN_NODES_PER_WIDTH}"
        )));
    }
    let lt = target.half_width();
    if params.x0().iter().any(|&c| c < -lt || c >= lt) {
        return Err(Error::Unresolvable(format!(
            "x0 = {:?} lies outside the target box {target}",
            params.x0()
        )));
    }
    let ls = v.grid().half_width();
    let x0 = params.x0();
    Ok(Field::from_fn(target, |x| {
        let mut y = [0.0; 2];
        for i in 0..x.len() {
            y[i] = (x[i] - x0[i]) / eps;
            if y[i] < -ls || y[i] >= ls {
                return 0.0;
            }
        }
        v.interpolate_cubic(&y[..x.len()])
    }))
}
