//! Self-tests behind the `check` subcommand: assembly, adjoint, and
//! gradient identities evaluated on the configured system with a fixed
//! random seed, each reported as a pass/fail outcome.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::evolution::{
    System, TimeGridFunction, apply_r, apply_r_star, solve_backward, solve_forward,
};
use crate::grid::{assemble_control, assemble_operator, build_grid, sample_kernel};
use crate::linalg::{SolveMode, build_step_solver_with};
use crate::low_regret::{LowRegretSetup, cost_J_gamma, grad_J_gamma};
use crate::optimal::{ControlSetup, cost_J, grad_J};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// One named self-test result.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Short check name.
    pub name: &'static str,
    /// Whether the measured error stayed within the bound.
    pub passed: bool,
    /// Measured worst error and its bound.
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, bound: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= bound,
        detail: format!("max err {worst:.2e} (bound {bound:.0e})"),
    }
}

fn rand_tgf(rng: &mut ChaCha8Rng, sys: &System) -> TimeGridFunction {
    TimeGridFunction::from_fn(
        sys.grid.n_steps,
        sys.grid.n_interior,
        sys.grid.dt,
        |_, _| rng.random::<f64>() * 2.0 - 1.0,
    )
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the full suite on the configured system. Fails (as an error) only
/// when the configuration itself cannot be assembled; numeric failures are
/// reported per outcome.
pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let sys = cfg.build_system()?;
    let target = cfg.target_tgf(&sys.grid)?;
    let y0 = cfg.initial_datum_values(&sys.grid)?;
    let kernel = crate::config::resolve_kernel(&cfg.kernel, &sys.grid)?;
    let n = sys.grid.n_interior;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checks = Vec::new();

    // Dense assembly against the defining formula
    // A[i][j] = nu/h^2 * stencil + K1(x_i) * h * K2(x_j).
    {
        let dense = sys.op.dense();
        let scale = sys.grid.nu / (sys.grid.h * sys.grid.h);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let stencil = if i == j {
                    2.0 * scale
                } else if i.abs_diff(j) == 1 {
                    -scale
                } else {
                    0.0
                };
                let want = stencil + kernel.k1[i] * sys.grid.h * kernel.k2[j];
                worst = worst.max((dense[(i, j)] - want).abs());
            }
        }
        checks.push(outcome("operator assembly", worst, 1e-12));
    }

    // Structured apply against dense multiplication, both orientations.
    {
        let dense = sys.op.dense();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = rand_vec(&mut rng, n);
            let xv = nalgebra::DVector::from_column_slice(&x);
            for transposed in [false, true] {
                let fast = sys.op.apply(&x, transposed);
                let slow = if transposed {
                    dense.transpose() * &xv
                } else {
                    &dense * &xv
                };
                for i in 0..n {
                    worst = worst.max((fast[i] - slow[i]).abs());
                }
            }
        }
        checks.push(outcome("rank-one apply", worst, 1e-12));
    }

    // (A x, y) = (x, A^T y) on random probes.
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = rand_vec(&mut rng, n);
            let y = rand_vec(&mut rng, n);
            let lhs = euclidean(&sys.op.apply(&x, false), &y);
            let rhs = euclidean(&x, &sys.op.apply(&y, true));
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
        checks.push(outcome("operator transpose", worst, 1e-12));
    }

    // The control mask is a projection: B(Bx) = Bx, zero off the region,
    // identity on it.
    {
        let x = rand_vec(&mut rng, n);
        let once = sys.control.apply(&x);
        let twice = sys.control.apply(&once);
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((once[i] - twice[i]).abs());
            let want = if sys.control.mask[i] { x[i] } else { 0.0 };
            worst = worst.max((once[i] - want).abs());
        }
        checks.push(outcome("control projection", worst, 0.0));
    }

    // Per-step solves satisfy ((1/dt) I + A) x = r to machine precision,
    // in both orientations.
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let r = rand_vec(&mut rng, n);
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            for transposed in [false, true] {
                let x = sys.solver.solve(&r, transposed)?;
                let ax = sys.op.apply(&x, transposed);
                let mut res = 0.0f64;
                for i in 0..n {
                    res += (x[i] / sys.grid.dt + ax[i] - r[i]).powi(2);
                }
                worst = worst.max(res.sqrt() / rnorm.max(1e-300));
            }
        }
        checks.push(outcome("step-solver residual", worst, 1e-12));
    }

    // Structured and dense backends agree.
    {
        let fast = build_step_solver_with(&sys.op, sys.grid.dt, SolveMode::Structured)?;
        let slow = build_step_solver_with(&sys.op, sys.grid.dt, SolveMode::Dense)?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let r = rand_vec(&mut rng, n);
            for transposed in [false, true] {
                let a = fast.solve(&r, transposed)?;
                let b = slow.solve(&r, transposed)?;
                let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
                for i in 0..n {
                    worst = worst.max((a[i] - b[i]).abs() / scale);
                }
            }
        }
        checks.push(outcome("backend agreement", worst, 1e-10));
    }

    // Adjoint identity for the forward map: (S v, z) = (v, S* z).
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let v = rand_tgf(&mut rng, &sys);
            let z = rand_tgf(&mut rng, &sys);
            let sv = solve_forward(&sys, &v, &vec![0.0; n])?.into_values();
            let sstar = solve_backward(&sys, &z)?.masked(&sys.control);
            let lhs = sv.inner(&z);
            let rhs = v.inner(&sstar);
            worst = worst.max((lhs - rhs).abs() / (v.norm() * z.norm()).max(1e-300));
        }
        checks.push(outcome("adjoint identity S", worst, 1e-10));
    }

    // Adjoint identity for the cascade map: <R v, (s0, f)> = (v, R*(s0, f)).
    {
        let (beta, gamma) = (cfg.betas[0], cfg.gammas[0]);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let v = rand_tgf(&mut rng, &sys);
            let s0 = rand_vec(&mut rng, n);
            let f = rand_tgf(&mut rng, &sys);
            let (rxi, ry) = apply_r(&sys, &v, beta, gamma)?;
            let lhs = euclidean(&rxi, &s0) + ry.inner(&f);
            let rstar = apply_r_star(&sys, &s0, &f, beta, gamma)?;
            let rhs = v.inner(&rstar);
            let s0n = s0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let denom = (v.norm() * (s0n + f.norm())).max(1e-300);
            worst = worst.max((lhs - rhs).abs() / denom);
        }
        checks.push(outcome("adjoint identity R", worst, 1e-10));
    }

    // Tracking gradient against central differences of the functional.
    {
        let setup = ControlSetup::new(cfg.betas[0], cfg.mu, target.clone(), y0.clone())?;
        let f = |v: &TimeGridFunction| -> Result<f64> {
            let y = solve_forward(&sys, v, &setup.y0)?.into_values();
            let d = y.minus(&setup.target);
            let bv = v.masked(&sys.control);
            Ok(setup.beta * d.inner(&d) + setup.mu * bv.inner(&bv))
        };
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let v = rand_tgf(&mut rng, &sys);
            let w = rand_tgf(&mut rng, &sys);
            let directional = grad_J(&sys, &setup, &v)?.inner(&w);
            let eps = 1e-5;
            let mut vp = v.clone();
            vp.axpy(eps, &w);
            let mut vm = v.clone();
            vm.axpy(-eps, &w);
            let fd = (f(&vp)? - f(&vm)?) / (2.0 * eps);
            worst = worst.max((fd - directional).abs() / directional.abs().max(1.0));
        }
        checks.push(outcome("gradient check (tracking)", worst, 1e-5));
    }

    // Low-regret gradient against central differences.
    {
        let setup = LowRegretSetup::new(cfg.betas[0], cfg.mu, target.clone(), cfg.gammas[0])?;
        let f = |v: &TimeGridFunction| -> Result<f64> {
            // cost_J_gamma reports h times the functional the gradient
            // differentiates.
            Ok(cost_J_gamma(&sys, &setup, v)?.0 / sys.grid.h)
        };
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let v = rand_tgf(&mut rng, &sys);
            let w = rand_tgf(&mut rng, &sys);
            let directional = grad_J_gamma(&sys, &setup, &v)?.inner(&w);
            let eps = 1e-5;
            let mut vp = v.clone();
            vp.axpy(eps, &w);
            let mut vm = v.clone();
            vm.axpy(-eps, &w);
            let fd = (f(&vp)? - f(&vm)?) / (2.0 * eps);
            worst = worst.max((fd - directional).abs() / directional.abs().max(1.0));
        }
        checks.push(outcome("gradient check (low-regret)", worst, 1e-5));
    }

    // Closed-form decay of the discrete sine mode under the pure diffusion
    // operator (zero kernel, same grid dimensions).
    {
        let g = build_grid(
            sys.grid.n_interior,
            sys.grid.n_steps,
            sys.grid.horizon,
            sys.grid.nu,
        )?;
        let k = sample_kernel(|_| 0.0, |_| 0.0, &g)?;
        let op = assemble_operator(&g, &k)?;
        let c = assemble_control(&g, cfg.control_region.0, cfg.control_region.1)?;
        let pure = System::new(g, op, c, SolveMode::Structured)?;
        let mode: Vec<f64> = pure.grid.xs().iter().map(|&x| (PI * x).sin()).collect();
        let traj = pure.march_free(&mode)?;
        let lambda =
            2.0 / (pure.grid.h * pure.grid.h) * (1.0 - (PI * pure.grid.h).cos());
        let mut worst = 0.0f64;
        for k in 1..=pure.grid.n_steps {
            let decay = (1.0 + pure.grid.dt * pure.grid.nu * lambda).powi(-(k as i32));
            for (i, &m) in mode.iter().enumerate() {
                worst = worst.max((traj.state(k)[i] - decay * m).abs());
            }
        }
        checks.push(outcome("eigenmode decay", worst, 1e-10));
    }

    // Cost identity: the reports decompose exactly.
    {
        let setup = ControlSetup::new(cfg.betas[0], cfg.mu, target.clone(), y0.clone())?;
        let lr = LowRegretSetup::new(cfg.betas[0], cfg.mu, target.clone(), cfg.gammas[0])?;
        let v = rand_tgf(&mut rng, &sys);
        let (total, parts) = cost_J(&sys, &setup, &v)?;
        let mut worst =
            (total - (parts.cost_tracking + parts.cost_control)).abs() / total.abs().max(1.0);
        let (total_g, parts_g) = cost_J_gamma(&sys, &lr, &v)?;
        let tq = crate::evolution::norm_q(&sys.grid, &lr.base.target);
        let sum = parts_g.cost_tracking + parts_g.cost_control - lr.base.beta * tq * tq
            + parts_g.regret_term.unwrap_or(0.0);
        worst = worst.max((total_g - sum).abs() / total_g.abs().max(1.0));
        checks.push(outcome("cost decomposition", worst, 1e-10));
    }

    Ok(checks)
}
