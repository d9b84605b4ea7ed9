//! Optimal and low-regret control of a one-dimensional heat equation with a
//! rank-one nonlocal coupling, discretized by finite differences in space
//! and implicit Euler in time.
//!
//! The crate builds the discrete operator `A = A_D + u w^T`, factors the
//! per-step systems once (Thomas + Sherman-Morrison, with a dense fallback),
//! and exposes matrix-free forward/adjoint solution maps. On top of those it
//! solves two control problems on an interior control region:
//!
//! - the classical tracking problem `min beta ||y - z||^2 + mu ||B v||^2`,
//! - the low-regret problem for unknown initial data, which augments the
//!   tracking functional with a regret term weighted by `1/gamma`.
//!
//! Both reduce to symmetric positive definite normal equations solved by
//! conjugate gradients (or gradient descent). The `experiments` module and
//! the companion binary reproduce the reference parameter sweeps as CSV
//! files.

pub mod config;
pub mod csv_io;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod low_regret;
pub mod optimal;
pub mod solver;

pub use config::{ExperimentConfig, load_config};
pub use error::{Error, Result};
pub use evolution::{
    System, TimeGridFunction, Trajectory, apply_r, apply_r_star, norm_q, solve_backward,
    solve_forward, solve_xi,
};
pub use grid::{
    ControlOperator, Grid, NonlocalOperator, SeparatedKernel, assemble_control,
    assemble_operator, build_grid, sample_kernel,
};
pub use linalg::{SolveMode, StepSolver, build_step_solver, solve_step};
pub use low_regret::{
    LowRegretSetup, cost_J_gamma, evaluate_control, grad_J_gamma, solve_low_regret,
};
pub use optimal::{ControlSetup, SolveReport, cost_J, grad_J, solve_optimal_control};
pub use solver::{IterStats, Method, SolverConfig, solve_spd};
