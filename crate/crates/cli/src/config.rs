//! Flat TOML run configuration.
//!
//! Every key is top-level. Unknown keys are rejected, omitted solver keys take
//! the library defaults, and all problem invariants are re-checked at load.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use fracground_core::model::PotentialFamily;
use fracground_core::solver::InitKind;
use fracground_core::{Grid, Potential, ProblemParams, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    SweepEps,
    Uniqueness,
    Coercivity,
    ValidateOperator,
    Decay,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::SweepEps => "sweep-eps",
            Self::Uniqueness => "uniqueness",
            Self::Coercivity => "coercivity",
            Self::ValidateOperator => "validate-operator",
            Self::Decay => "decay",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

mod defaults {
    use fracground_core::SolverConfig;

    pub fn eps() -> f64 {
        1.0
    }
    pub fn max_iters() -> usize {
        SolverConfig::default().max_iters
    }
    pub fn step() -> f64 {
        SolverConfig::default().step
    }
    pub fn tol_residual() -> f64 {
        SolverConfig::default().tol_residual
    }
    pub fn tol_stall() -> f64 {
        SolverConfig::default().tol_stall
    }
    pub fn init_kind() -> String {
        SolverConfig::default().init_kind.name().to_string()
    }
    pub fn output_dir() -> std::path::PathBuf {
        "runs".into()
    }
    pub fn starts() -> usize {
        5
    }
    pub fn probes() -> usize {
        32
    }
    pub fn nu_gap_threshold() -> f64 {
        0.05
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional here; the command line names the experiment and the two must agree.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    /// Empty means the origin.
    #[serde(default)]
    pub x0: Vec<f64>,
    /// `family` or `family[a, b, …]`.
    pub potential: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,

    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default = "defaults::step")]
    pub step: f64,
    #[serde(default = "defaults::tol_residual")]
    pub tol_residual: f64,
    #[serde(default = "defaults::tol_stall")]
    pub tol_stall: f64,
    #[serde(default = "defaults::init_kind")]
    pub init_kind: String,
    /// Defaults to `seed`.
    #[serde(default)]
    pub rng_seed: Option<u64>,
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub radial_class: bool,

    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,

    /// Multi-start count for `uniqueness`.
    #[serde(default = "defaults::starts")]
    pub starts: usize,
    /// Probe count for `coercivity`.
    #[serde(default = "defaults::probes")]
    pub probes: usize,
    /// Frozen minimum quotient; enables the 20% regression verdict.
    #[serde(default)]
    pub coercivity_reference: Option<f64>,
    /// `[r1, r2]`; defaults to `[0.3L, 0.7L]`.
    #[serde(default)]
    pub decay_window: Option<[f64; 2]>,
    /// Bound on the finest `|ν(V_ε) - ν(Ṽ)|` in `sweep-eps`.
    #[serde(default = "defaults::nu_gap_threshold")]
    pub nu_gap_threshold: f64,
    /// Re-solve on the doubled box in `solve` and require `ν` to move by at most 1e-4.
    #[serde(default)]
    pub box_check: bool,
}

/// Everything the experiments need, built from a checked [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub experiment: Experiment,
    pub params: ProblemParams,
    pub grid: Grid,
    pub solver: SolverConfig,
}

pub fn parse_potential(spec: &str, dim: usize) -> Result<Potential> {
    let spec = spec.trim();
    let (name, args) = match spec.split_once('[') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("potential `{spec}`: missing closing `]`"))?;
            let args = inner
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(|a| a.parse::<f64>().with_context(|| format!("potential `{spec}`: bad number `{a}`")))
                .collect::<Result<Vec<_>>>()?;
            (name.trim(), args)
        }
        None => (spec, Vec::new()),
    };
    let family = PotentialFamily::from_name(name).ok_or_else(|| {
        anyhow!("unknown potential family `{name}`; expected constant, smooth_well, radial_decreasing or double_well")
    })?;
    Potential::new(family, args, dim).with_context(|| format!("invariant violated: potential `{spec}`"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    /// Fills derived defaults and checks every invariant the experiments rely on.
    pub fn resolve(mut self, experiment: Experiment) -> Result<Resolved> {
        if let Some(declared) = self.experiment {
            if declared != experiment {
                bail!("config declares experiment `{declared}` but `{experiment}` was requested");
            }
        }
        self.experiment = Some(experiment);
        if self.x0.is_empty() {
            self.x0 = vec![0.0; self.dim];
        }
        if self.rng_seed.is_none() {
            self.rng_seed = Some(self.seed);
        }

        let grid = Grid::new(self.dim, self.n, self.half_width).context("invariant violated: grid")?;
        let potential = parse_potential(&self.potential, self.dim)?;
        let params = ProblemParams::new(self.dim, self.s, self.p, self.eps, &self.x0, potential)
            .context("invariant violated: problem parameters")?;

        let init_kind = InitKind::from_name(&self.init_kind).ok_or_else(|| {
            anyhow!(
                "unknown init_kind `{}`; expected gaussian_bump or random_positive",
                self.init_kind
            )
        })?;
        if init_kind == InitKind::WarmStart {
            bail!("init_kind warm_start needs an in-memory field and cannot be set from a config file");
        }
        let solver = SolverConfig {
            max_iters: self.max_iters,
            step: self.step,
            tol_residual: self.tol_residual,
            tol_stall: self.tol_stall,
            init_kind,
            rng_seed: self.rng_seed.unwrap_or(self.seed),
            refine: self.refine,
            radial_class: self.radial_class,
        };
        solver.validate().context("invariant violated: solver settings")?;

        match experiment {
            Experiment::SweepEps => {
                let list = self
                    .eps_list
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep-eps requires `eps_list`"))?;
                if list.is_empty() || list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                    bail!("invariant violated: eps_list entries must be positive, got {list:?}");
                }
                if list.windows(2).any(|w| w[1] >= w[0]) {
                    bail!("invariant violated: eps_list must be strictly decreasing, got {list:?}");
                }
            }
            Experiment::Uniqueness if self.starts < 3 => {
                bail!("invariant violated: uniqueness needs starts >= 3, got {}", self.starts)
            }
            Experiment::Coercivity if self.probes == 0 => {
                bail!("invariant violated: coercivity needs probes >= 1")
            }
            Experiment::ValidateOperator if self.dim != 1 => {
                bail!("validate-operator runs the N = 1 quadrature oracle; set dim = 1")
            }
            _ => {}
        }
        if let Some([r1, r2]) = self.decay_window {
            if !(0.0 < r1 && r1 < r2 && r2 <= 0.8 * self.half_width) {
                bail!(
                    "invariant violated: decay_window needs 0 < r1 < r2 <= 0.8 L = {}, got [{r1}, {r2}]",
                    0.8 * self.half_width
                );
            }
        }
        if !(self.nu_gap_threshold > 0.0) {
            bail!("invariant violated: nu_gap_threshold must be positive");
        }

        Ok(Resolved {
            config: self,
            experiment,
            params,
            grid,
            solver,
        })
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    RunConfig::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
}
