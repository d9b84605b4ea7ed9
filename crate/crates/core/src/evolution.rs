//! Time-marching operators: the forward map S (control to state), the
//! backward/adjoint map, the cascade maps R and R* used by the low-regret
//! problem, and the space-time function type they act on.

use crate::error::{Error, Result};
use crate::grid::{ControlOperator, Grid, NonlocalOperator};
use crate::linalg::{SolveMode, StepSolver, build_step_solver_with};

/// An element of the discrete space L2_dt(0,T;R^N): M vectors of length N,
/// stored row-major (one row per time step n = 1..=M).
///
/// The norm is `(sum_n dt * |f^n|^2)^(1/2)` with the plain Euclidean norm in
/// space — no h-weight. Reporting layers that need the h-weighted variant
/// scale by sqrt(h) (see [`norm_q`]).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridFunction {
    m: usize,
    n: usize,
    dt: f64,
    data: Vec<f64>,
}

impl TimeGridFunction {
    /// The zero function with `m` steps of dimension `n`.
    pub fn zeros(m: usize, n: usize, dt: f64) -> Self {
        Self {
            m,
            n,
            dt,
            data: vec![0.0; m * n],
        }
    }

    /// Builds from a per-entry closure `f(step, node)` with `step` in `0..m`
    /// (time index n = step+1) and `node` in `0..n`.
    pub fn from_fn(m: usize, n: usize, dt: f64, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(m, n, dt);
        for s in 0..m {
            for i in 0..n {
                out.data[s * n + i] = f(s, i);
            }
        }
        out
    }

    /// Repeats one spatial profile across all time steps.
    pub fn from_spatial(m: usize, dt: f64, profile: &[f64]) -> Self {
        Self::from_fn(m, profile.len(), dt, |_, i| profile[i])
    }

    /// Number of time steps M.
    pub fn steps(&self) -> usize {
        self.m
    }

    /// Spatial dimension N.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Time step dt.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The slice holding step `s` (time index n = s+1).
    pub fn step(&self, s: usize) -> &[f64] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    /// Mutable slice for step `s`.
    pub fn step_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.data[s * self.n..(s + 1) * self.n]
    }

    /// Flat view of all values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The L2_dt inner product `sum_n dt * (f^n, g^n)`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.m, self.n), (other.m, other.n));
        self.dt
            * self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// The L2_dt norm.
    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `self + a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!((self.m, self.n), (other.m, other.n));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// Multiplies every value by `a`, in place.
    pub fn scale(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x *= a;
        }
    }

    /// `self - other`, as a new function.
    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Applies the control mask to every time step, as a new function.
    pub fn masked(&self, control: &ControlOperator) -> Self {
        debug_assert_eq!(self.n, control.mask.len());
        let mut out = self.clone();
        for s in 0..out.m {
            control.apply_in_place(out.step_mut(s));
        }
        out
    }
}

/// The h-weighted space-time norm `sqrt(h * dt * sum |f^n|^2)` used by the
/// reporting layer (tables and figure captions quote this scaling).
pub fn norm_q(grid: &Grid, f: &TimeGridFunction) -> f64 {
    grid.h.sqrt() * f.norm()
}

/// A forward trajectory: the initial state y^0 plus the M marched states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    y0: Vec<f64>,
    states: TimeGridFunction,
}

impl Trajectory {
    /// The initial state y^0 (equals the supplied datum exactly).
    pub fn initial(&self) -> &[f64] {
        &self.y0
    }

    /// State at time index `k` for `k` in `0..=M`.
    pub fn state(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.y0
        } else {
            self.states.step(k - 1)
        }
    }

    /// The terminal state y^M.
    pub fn terminal(&self) -> &[f64] {
        self.state(self.states.steps())
    }

    /// The marched part (y^1..y^M) as a space-time function.
    pub fn values(&self) -> &TimeGridFunction {
        &self.states
    }

    /// Consumes the trajectory, keeping only the marched part.
    pub fn into_values(self) -> TimeGridFunction {
        self.states
    }
}

/// Immutable bundle of everything a solve needs: the grid, the assembled
/// operator, its factored per-step solver, and the control mask. Safe to
/// share across threads.
#[derive(Debug)]
pub struct System {
    /// The space-time grid.
    pub grid: Grid,
    /// The discrete operator A = A_D + u w^T.
    pub op: NonlocalOperator,
    /// Factored per-step solver for (1/dt)I + A and its transpose.
    pub solver: StepSolver,
    /// The diagonal control operator B.
    pub control: ControlOperator,
}

impl System {
    /// Builds the per-step solver and bundles the parts.
    pub fn new(
        grid: Grid,
        op: NonlocalOperator,
        control: ControlOperator,
        mode: SolveMode,
    ) -> Result<Self> {
        if op.n() != grid.n_interior || control.mask.len() != grid.n_interior {
            return Err(Error::InvalidArgument(
                "operator/control dimensions do not match the grid".into(),
            ));
        }
        let solver = build_step_solver_with(&op, grid.dt, mode)?;
        Ok(Self {
            grid,
            op,
            solver,
            control,
        })
    }

    fn check_tgf(&self, f: &TimeGridFunction, what: &str) -> Result<()> {
        if f.steps() != self.grid.n_steps || f.dim() != self.grid.n_interior {
            return Err(Error::InvalidArgument(format!(
                "{what} has shape {}x{}, expected {}x{}",
                f.steps(),
                f.dim(),
                self.grid.n_steps,
                self.grid.n_interior
            )));
        }
        Ok(())
    }

    /// A zero control/source of the right shape.
    pub fn zero_tgf(&self) -> TimeGridFunction {
        TimeGridFunction::zeros(self.grid.n_steps, self.grid.n_interior, self.grid.dt)
    }

    /// Marches the free (uncontrolled) equation from `y0`.
    pub fn march_free(&self, y0: &[f64]) -> Result<Trajectory> {
        self.march(y0, None)
    }

    fn march(&self, y0: &[f64], control: Option<&TimeGridFunction>) -> Result<Trajectory> {
        let n = self.grid.n_interior;
        if y0.len() != n {
            return Err(Error::InvalidArgument(format!(
                "initial datum has length {}, expected {n}",
                y0.len()
            )));
        }
        let dt = self.grid.dt;
        let mut states = self.zero_tgf();
        let mut prev = y0.to_vec();
        let mut rhs = vec![0.0; n];
        for s in 0..self.grid.n_steps {
            for i in 0..n {
                rhs[i] = prev[i] / dt;
            }
            if let Some(v) = control {
                let vn = v.step(s);
                for (i, &m) in self.control.mask.iter().enumerate() {
                    if m {
                        rhs[i] += vn[i];
                    }
                }
            }
            prev = self.solver.solve(&rhs, false)?;
            states.step_mut(s).copy_from_slice(&prev);
        }
        Ok(Trajectory {
            y0: y0.to_vec(),
            states,
        })
    }
}

/// Solves the controlled forward system
/// `(y^{n+1} - y^n)/dt + A y^{n+1} = B v^{n+1}` from `y0`. With `y0 = 0`
/// this is the solution map S applied to `v`.
pub fn solve_forward(sys: &System, v: &TimeGridFunction, y0: &[f64]) -> Result<Trajectory> {
    sys.check_tgf(v, "control")?;
    sys.march(y0, Some(v))
}

/// Solves the backward system `(p^n - p^{n+1})/dt + A^T p^n = z^n` with
/// `p^{M+1} = 0`, marching n = M down to 1. Returns the raw trajectory
/// (p^1..p^M); adjoint compositions apply the control mask on top.
pub fn solve_backward(sys: &System, z: &TimeGridFunction) -> Result<TimeGridFunction> {
    sys.check_tgf(z, "backward source")?;
    let n = sys.grid.n_interior;
    let m = sys.grid.n_steps;
    let dt = sys.grid.dt;
    let mut p = sys.zero_tgf();
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for s in (0..m).rev() {
        let zs = z.step(s);
        for i in 0..n {
            rhs[i] = next[i] / dt + zs[i];
        }
        next = sys.solver.solve(&rhs, true)?;
        p.step_mut(s).copy_from_slice(&next);
    }
    Ok(p)
}

/// Solves the adjoint system for xi with source `y` (same recursion as
/// [`solve_backward`]) and returns both xi^1 and the full trajectory.
pub fn solve_xi(sys: &System, y: &TimeGridFunction) -> Result<(Vec<f64>, TimeGridFunction)> {
    let xi = solve_backward(sys, y)?;
    let xi1 = xi.step(0).to_vec();
    Ok((xi1, xi))
}

/// The low-regret cascade map R: v -> (sqrt(beta/gamma) xi^1, y) where
/// y = S v and xi solves the adjoint system with source y.
pub fn apply_r(
    sys: &System,
    v: &TimeGridFunction,
    beta: f64,
    gamma: f64,
) -> Result<(Vec<f64>, TimeGridFunction)> {
    check_beta_gamma(beta, gamma)?;
    let y = solve_forward(sys, v, &vec![0.0; sys.grid.n_interior])?.into_values();
    let (mut xi1, _) = solve_xi(sys, &y)?;
    let scale = (beta / gamma).sqrt();
    xi1.iter_mut().for_each(|x| *x *= scale);
    Ok((xi1, y))
}

/// The adjoint cascade map R*: takes the scaled first slot
/// `sqrt(beta/gamma) sigma0` and a source `f`, evolves sigma forward from
/// `sigma^0 = -(beta/gamma) sigma0` with zero source, then solves the
/// backward system with source `f - sigma`. The result carries the control
/// mask so that R and R* are exact adjoints over the product pairing
/// (Euclidean on the first slot, L2_dt on the second).
pub fn apply_r_star(
    sys: &System,
    scaled_sigma0: &[f64],
    f: &TimeGridFunction,
    beta: f64,
    gamma: f64,
) -> Result<TimeGridFunction> {
    check_beta_gamma(beta, gamma)?;
    let n = sys.grid.n_interior;
    if scaled_sigma0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "sigma0 has length {}, expected {n}",
            scaled_sigma0.len()
        )));
    }
    sys.check_tgf(f, "R* source")?;
    // Undo the interface scaling, then apply the cascade's own factor.
    let factor = -(beta / gamma) / (beta / gamma).sqrt();
    let sigma_init: Vec<f64> = scaled_sigma0.iter().map(|&s| factor * s).collect();
    let sigma = sys.march_free(&sigma_init)?.into_values();
    let source = f.minus(&sigma);
    let p = solve_backward(sys, &source)?;
    Ok(p.masked(&sys.control))
}

fn check_beta_gamma(beta: f64, gamma: f64) -> Result<()> {
    if beta <= 0.0 || beta.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if gamma <= 0.0 || gamma.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}
