//! The low-regret problem for incomplete initial data: cost functional,
//! gradient, normal-equation solve, and a-posteriori evaluation of a
//! control against a later-revealed initial datum.

use crate::error::{Error, Result};
use crate::evolution::{System, TimeGridFunction, apply_r, apply_r_star, norm_q, solve_forward, solve_xi};
use crate::optimal::{ControlSetup, SolveReport, check_setup, s_apply, s_star};
use crate::solver::{SolverConfig, solve_spd};

/// Problem data for the low-regret functional. The nominal state is marched
/// from the zero datum; `gamma` weighs how much regret against unknown
/// initial perturbations is tolerated (small gamma = more conservative).
#[derive(Debug, Clone)]
pub struct LowRegretSetup {
    /// The underlying tracking data, with zero initial datum.
    pub base: ControlSetup,
    /// Regret weight gamma > 0.
    pub gamma: f64,
}

impl LowRegretSetup {
    /// Validates the weights and bundles the problem data.
    pub fn new(beta: f64, mu: f64, target: TimeGridFunction, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let y0 = vec![0.0; target.dim()];
        Ok(Self {
            base: ControlSetup::new(beta, mu, target, y0)?,
            gamma,
        })
    }
}

/// Evaluates the low-regret cost at `v`, reported (like [`crate::optimal::cost_J`])
/// in the h-weighted convention:
///
/// `beta ||y - target||_Q^2 + mu ||B v||_Q^2 - beta ||target||_Q^2
///  + (beta^2/gamma) h |xi^1|^2`
///
/// with `y = y(v, 0)` and xi the adjoint cascade state. At `v = 0` this is
/// exactly zero, and it is negative precisely when `v` improves on doing
/// nothing in the worst-case sense.
#[allow(non_snake_case)]
pub fn cost_J_gamma(
    sys: &System,
    setup: &LowRegretSetup,
    v: &TimeGridFunction,
) -> Result<(f64, SolveReport)> {
    check_setup(sys, &setup.base)?;
    let beta = setup.base.beta;
    let y = s_apply(sys, v)?;
    let (xi1, _) = solve_xi(sys, &y)?;
    let dist_q = norm_q(&sys.grid, &y.minus(&setup.base.target));
    let cost_q = norm_q(&sys.grid, &v.masked(&sys.control));
    let target_q = norm_q(&sys.grid, &setup.base.target);
    let tracking = beta * dist_q * dist_q;
    let control = setup.base.mu * cost_q * cost_q;
    let regret = beta * beta / setup.gamma
        * sys.grid.h
        * xi1.iter().map(|x| x * x).sum::<f64>();
    let total = tracking + control - beta * target_q * target_q + regret;
    Ok((
        total,
        SolveReport {
            iterations: 0,
            residual_history: Vec::new(),
            cost_total: total,
            cost_tracking: tracking,
            cost_control: control,
            regret_term: Some(regret),
        },
    ))
}

/// The gradient of the (unweighted) low-regret functional over L2_dt:
/// `2 beta R*(R v) + 2 mu B v - 2 beta S* target`. As with the tracking
/// problem, the reporting scale of [`cost_J_gamma`] is the constant h times
/// this functional, so minimizer and normal equation are shared.
#[allow(non_snake_case)]
pub fn grad_J_gamma(
    sys: &System,
    setup: &LowRegretSetup,
    v: &TimeGridFunction,
) -> Result<TimeGridFunction> {
    check_setup(sys, &setup.base)?;
    let beta = setup.base.beta;
    let (xi1, y) = apply_r(sys, v, beta, setup.gamma)?;
    let mut grad = apply_r_star(sys, &xi1, &y, beta, setup.gamma)?;
    grad.scale(2.0 * beta);
    grad.axpy(2.0 * setup.base.mu, &v.masked(&sys.control));
    let mut pull = s_star(sys, &setup.base.target)?;
    pull.scale(-2.0 * beta);
    grad.axpy(1.0, &pull);
    Ok(grad)
}

/// Solves the low-regret normal equation
/// `(beta R'R + mu B'B) v = beta S' target` by the configured iteration and
/// reports the cost decomposition at the solution.
pub fn solve_low_regret(
    sys: &System,
    setup: &LowRegretSetup,
    cfg: &SolverConfig,
) -> Result<(TimeGridFunction, SolveReport)> {
    check_setup(sys, &setup.base)?;
    let beta = setup.base.beta;
    let gamma = setup.gamma;
    let mu = setup.base.mu;
    let mut b = s_star(sys, &setup.base.target)?;
    b.scale(beta);
    let apply = |v: &TimeGridFunction| -> TimeGridFunction {
        let (xi1, y) = apply_r(sys, v, beta, gamma).expect("cascade solve");
        let mut hv = apply_r_star(sys, &xi1, &y, beta, gamma).expect("adjoint cascade solve");
        hv.scale(beta);
        hv.axpy(mu, &v.masked(&sys.control));
        hv
    };
    let (v, stats) = solve_spd(apply, &b, cfg)?;
    let (_, mut report) = cost_J_gamma(sys, setup, &v)?;
    report.iterations = stats.iterations;
    report.residual_history = stats.residual_history;
    Ok((v, report))
}

/// Evaluates a fixed control `v` against a revealed initial datum: marches
/// `y(v, y0)`, and returns the tracking cost
/// `(beta dist_Q^2 + ||B v||_Q^2) / 2` (control weight 1) together with the
/// distance `dist_Q = ||y - target||_Q`.
pub fn evaluate_control(
    sys: &System,
    v: &TimeGridFunction,
    y0: &[f64],
    beta: f64,
    target: &TimeGridFunction,
) -> Result<(f64, f64)> {
    let setup = ControlSetup::new(beta, 1.0, target.clone(), y0.to_vec())?;
    check_setup(sys, &setup)?;
    let y = solve_forward(sys, v, y0)?.into_values();
    let dist_q = norm_q(&sys.grid, &y.minus(target));
    let cost_q = norm_q(&sys.grid, &v.masked(&sys.control));
    let j = 0.5 * (beta * dist_q * dist_q + cost_q * cost_q);
    Ok((j, dist_q))
}
