//! Experiment configuration: JSON schema, named function/kernel presets,
//! validation, and resolution into assembled solver objects.

use crate::error::{Error, Result};
use crate::evolution::{System, TimeGridFunction};
use crate::grid::{Grid, assemble_control, assemble_operator, build_grid, sample_kernel};
use crate::linalg::SolveMode;
use crate::solver::{Method, SolverConfig};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Spatial/temporal discretization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Number of interior nodes N.
    pub n: usize,
    /// Number of time steps M.
    pub m: usize,
    /// Final time T.
    pub horizon: f64,
    /// Diffusivity nu.
    pub nu: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 60,
            m: 100,
            horizon: 1.0,
            nu: 0.1,
        }
    }
}

/// A kernel, either one of the named presets or inline sample tables at the
/// interior nodes.
///
/// Named presets: `"paper"` (the reference setup: K1 = sin(5 pi x),
/// K2 = 20 sin(pi theta) on (0, 1/2), zero beyond), `"zero"`, and
/// `"constant(c)"` (K1 = c, K2 = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    /// A named preset.
    Named(String),
    /// Inline sample tables, each of length N.
    Samples {
        /// K1 samples at the interior nodes.
        k1: Vec<f64>,
        /// K2 samples at the interior nodes.
        k2: Vec<f64>,
    },
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::Named("paper".into())
    }
}

/// A spatial profile, either a named preset or inline samples at the
/// interior nodes.
///
/// Named presets for initial data: `"paper"` (2 sin(pi x)), `"sin10"`
/// (sin^10(pi x)), `"const(c)"`, `"step"` (+1 on (0.5,0.8), -1 on
/// (0.2,0.5)), `"mixed"` (sin(pi x/3) + 0.3 cos(15 pi x/4)), `"zero"`.
/// For the target: `"paper"` (sin(2 pi x)), `"zero"`, `"const(c)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    /// A named preset.
    Named(String),
    /// Inline samples at the interior nodes (length N).
    Samples(Vec<f64>),
}

impl FunctionSpec {
    /// A short label for table rows: the preset name, or `inline` for
    /// sample tables.
    pub fn label(&self) -> String {
        match self {
            Self::Named(name) => name.clone(),
            Self::Samples(_) => "inline".into(),
        }
    }
}

/// Which per-step linear solver backs the time marching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Thomas factorization plus a rank-one correction, O(N) per step.
    #[default]
    Structured,
    /// Dense LU of the step matrix (reference/debugging path).
    Dense,
}

impl LinearSolver {
    /// The corresponding solve mode.
    pub fn mode(self) -> SolveMode {
        match self {
            Self::Structured => SolveMode::Structured,
            Self::Dense => SolveMode::Dense,
        }
    }
}

/// Iteration settings for the normal-equation solves, plus the choice of
/// per-step backend and output masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Iterative method for the normal equations.
    pub method: Method,
    /// Relative residual tolerance.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Fixed step size for gradient descent (auto-calibrated when absent).
    pub step_size: Option<f64>,
    /// Per-step linear solver backend.
    pub linear_solver: LinearSolver,
    /// When true, stored controls are masked to the control region
    /// (B v instead of v). Costs are unaffected since only B v enters them.
    pub mask_control: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            method: s.method,
            tol: s.tol,
            max_iter: s.max_iter,
            step_size: s.step_size,
            linear_solver: LinearSolver::default(),
            mask_control: false,
        }
    }
}

impl SolverSettings {
    /// The iteration part of the settings.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            method: self.method,
            tol: self.tol,
            max_iter: self.max_iter,
            step_size: self.step_size,
        }
    }
}

/// A full experiment description. Every field has a default reproducing the
/// reference setup, so `{}` is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Discretization parameters.
    pub grid: GridSpec,
    /// Nonlocal kernel.
    pub kernel: KernelSpec,
    /// Control region (a, b) with 0 <= a < b <= 1.
    pub control_region: (f64, f64),
    /// Tracking target profile.
    pub target: FunctionSpec,
    /// Initial datum for `uncontrolled` and `optimal` runs.
    pub initial_datum: FunctionSpec,
    /// Initial data family for `evaluate` and the comparison tables.
    pub evaluation_data: Vec<FunctionSpec>,
    /// Tracking weights for sweeps (first entry is the default weight).
    pub betas: Vec<f64>,
    /// Regret weights for low-regret sweeps.
    pub gammas: Vec<f64>,
    /// (beta, gamma) cells excluded from sweeps.
    pub skip_cells: Vec<(f64, f64)>,
    /// Control weight mu.
    pub mu: f64,
    /// Solver settings.
    pub solver: SolverSettings,
    /// Output directory (CLI `--out` takes precedence).
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            kernel: KernelSpec::default(),
            control_region: (0.2, 0.8),
            target: FunctionSpec::Named("paper".into()),
            initial_datum: FunctionSpec::Named("paper".into()),
            evaluation_data: vec![
                FunctionSpec::Named("sin10".into()),
                FunctionSpec::Named("const(3)".into()),
                FunctionSpec::Named("step".into()),
                FunctionSpec::Named("mixed".into()),
            ],
            betas: vec![100.0],
            gammas: vec![1.0],
            skip_cells: vec![(100.0, 0.01)],
            mu: 1.0,
            solver: SolverSettings::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Checks list/weight invariants that do not need the grid.
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::Config("betas: list must be non-empty".into()));
        }
        for &b in &self.betas {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("betas: must be positive, got {b}")));
            }
        }
        if self.gammas.is_empty() {
            return Err(Error::Config("gammas: list must be non-empty".into()));
        }
        for &g in &self.gammas {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gammas: must be positive, got {g}")));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu: must be positive, got {}", self.mu)));
        }
        if self.evaluation_data.is_empty() {
            return Err(Error::Config("evaluation_data: list must be non-empty".into()));
        }
        for &(b, g) in &self.skip_cells {
            if !(b.is_finite() && g.is_finite()) {
                return Err(Error::Config(format!(
                    "skip_cells: entries must be finite, got ({b}, {g})"
                )));
            }
        }
        self.solver.solver_config().validate()
    }

    /// Assembles the grid, operator, per-step solver, and control mask.
    pub fn build_system(&self) -> Result<System> {
        self.validate()?;
        let grid = build_grid(self.grid.n, self.grid.m, self.grid.horizon, self.grid.nu)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        let kernel = resolve_kernel(&self.kernel, &grid)?;
        let op = assemble_operator(&grid, &kernel)?;
        let control = assemble_control(&grid, self.control_region.0, self.control_region.1)?;
        System::new(grid, op, control, self.solver.linear_solver.mode())
    }

    /// The target as a space-time function on this configuration's grid.
    pub fn target_tgf(&self, grid: &Grid) -> Result<TimeGridFunction> {
        let profile = resolve_target(&self.target, grid)?;
        Ok(TimeGridFunction::from_spatial(grid.n_steps, grid.dt, &profile))
    }

    /// The initial datum sampled at the interior nodes.
    pub fn initial_datum_values(&self, grid: &Grid) -> Result<Vec<f64>> {
        resolve_initial(&self.initial_datum, grid)
    }

    /// The sweep cells: the (beta, gamma) cross product minus `skip_cells`.
    pub fn sweep_cells(&self) -> Vec<(f64, f64)> {
        cross_minus_skips(&self.betas, &self.gammas, &self.skip_cells)
    }
}

/// The cross product of the weight lists with the skipped cells removed.
pub fn cross_minus_skips(
    betas: &[f64],
    gammas: &[f64],
    skips: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let mut cells = Vec::new();
    for &b in betas {
        for &g in gammas {
            if !skips.iter().any(|&(sb, sg)| sb == b && sg == g) {
                cells.push((b, g));
            }
        }
    }
    cells
}

/// Parses `prefix(c)` into the constant c.
fn parse_paren(name: &str, prefix: &str) -> Option<f64> {
    name.strip_prefix(prefix)?
        .strip_prefix('(')?
        .strip_suffix(')')?
        .trim()
        .parse()
        .ok()
}

fn sample_profile(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.xs().iter().map(|&x| f(x)).collect()
}

fn check_samples(values: &[f64], grid: &Grid, key: &str) -> Result<()> {
    if values.len() != grid.n_interior {
        return Err(Error::Config(format!(
            "{key}: inline samples have length {}, expected N = {}",
            values.len(),
            grid.n_interior
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{key}: non-finite sample {v}")));
    }
    Ok(())
}

/// Resolves an initial-datum spec to node samples.
pub fn resolve_initial(spec: &FunctionSpec, grid: &Grid) -> Result<Vec<f64>> {
    match spec {
        FunctionSpec::Samples(values) => {
            check_samples(values, grid, "initial_datum")?;
            Ok(values.clone())
        }
        FunctionSpec::Named(name) => match name.as_str() {
            "paper" | "reference" => Ok(sample_profile(grid, |x| 2.0 * (PI * x).sin())),
            "sin10" => Ok(sample_profile(grid, |x| (PI * x).sin().powi(10))),
            "step" => Ok(sample_profile(grid, |x| {
                if x > 0.5 && x < 0.8 {
                    1.0
                } else if x > 0.2 && x < 0.5 {
                    -1.0
                } else {
                    0.0
                }
            })),
            "mixed" => Ok(sample_profile(grid, |x| {
                (PI * x / 3.0).sin() + 0.3 * (15.0 * PI * x / 4.0).cos()
            })),
            "zero" => Ok(vec![0.0; grid.n_interior]),
            other => {
                if let Some(c) = parse_paren(other, "const") {
                    Ok(vec![c; grid.n_interior])
                } else {
                    Err(Error::Config(format!(
                        "initial_datum: unknown function name {other:?} \
                         (expected paper, sin10, const(c), step, mixed, zero, or samples)"
                    )))
                }
            }
        },
    }
}

/// Resolves a target spec to node samples.
pub fn resolve_target(spec: &FunctionSpec, grid: &Grid) -> Result<Vec<f64>> {
    match spec {
        FunctionSpec::Samples(values) => {
            check_samples(values, grid, "target")?;
            Ok(values.clone())
        }
        FunctionSpec::Named(name) => match name.as_str() {
            "paper" | "reference" => Ok(sample_profile(grid, |x| (2.0 * PI * x).sin())),
            "zero" => Ok(vec![0.0; grid.n_interior]),
            other => {
                if let Some(c) = parse_paren(other, "const") {
                    Ok(vec![c; grid.n_interior])
                } else {
                    Err(Error::Config(format!(
                        "target: unknown function name {other:?} \
                         (expected paper, zero, const(c), or samples)"
                    )))
                }
            }
        },
    }
}

/// Resolves a kernel spec to sample tables.
pub fn resolve_kernel(spec: &KernelSpec, grid: &Grid) -> Result<crate::grid::SeparatedKernel> {
    match spec {
        KernelSpec::Samples { k1, k2 } => {
            check_samples(k1, grid, "kernel.k1")?;
            check_samples(k2, grid, "kernel.k2")?;
            Ok(crate::grid::SeparatedKernel {
                k1: k1.clone(),
                k2: k2.clone(),
            })
        }
        KernelSpec::Named(name) => match name.as_str() {
            "paper" | "reference" => sample_kernel(
                |x| (5.0 * PI * x).sin(),
                |t| if t < 0.5 { 20.0 * (PI * t).sin() } else { 0.0 },
                grid,
            ),
            "zero" => sample_kernel(|_| 0.0, |_| 0.0, grid),
            other => {
                if let Some(c) = parse_paren(other, "constant") {
                    sample_kernel(|_| c, |_| 1.0, grid)
                } else {
                    Err(Error::Config(format!(
                        "kernel: unknown kernel name {other:?} \
                         (expected paper, zero, constant(c), or {{k1, k2}} samples)"
                    )))
                }
            }
        },
    }
}

/// Loads and validates a configuration from a JSON file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!("{}: {e}", path.display()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}
