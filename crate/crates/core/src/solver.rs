//! Matrix-free iterative solvers for the normal equations: conjugate
//! gradients on the SPD operator (default) and fixed-step gradient descent
//! (fidelity fallback), both over the L2_dt geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::TimeGridFunction;

/// Which iteration drives the normal-equation solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conjugate gradients (deterministic, fast on SPD operators).
    #[default]
    Cg,
    /// Gradient descent with a fixed step.
    #[serde(alias = "gd")]
    GradientDescent,
}

/// Iteration parameters shared by both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Iterative method.
    pub method: Method,
    /// Relative-residual stopping tolerance.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Fixed step for gradient descent. When absent, a deterministic
    /// power-iteration estimate lambda of the operator norm picks
    /// 0.9 / lambda.
    pub step_size: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Cg,
            tol: 1e-8,
            max_iter: 500,
            step_size: None,
        }
    }
}

impl SolverConfig {
    /// Validates the numeric fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!(
                "solver.tol must be a positive number, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be >= 1".into()));
        }
        if let Some(s) = self.step_size
            && !(s > 0.0 && s.is_finite())
        {
            return Err(Error::Config(format!(
                "solver.step_size must be a positive number, got {s}"
            )));
        }
        Ok(())
    }
}

/// Iteration outcome: count and the relative-residual history
/// (entry k is |r_k| / |b|, starting at k = 0).
#[derive(Debug, Clone)]
pub struct IterStats {
    /// Iterations performed.
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial 1.
    pub residual_history: Vec<f64>,
}

/// Solves H v = b for an SPD operator `apply` over the L2_dt inner product,
/// starting from v = 0. Returns the iterate whose relative residual
/// |H v - b| / |b| is at or below `cfg.tol`, or a non-convergence error
/// carrying the last iterate.
pub fn solve_spd<F>(apply: F, b: &TimeGridFunction, cfg: &SolverConfig) -> Result<(TimeGridFunction, IterStats)>
where
    F: Fn(&TimeGridFunction) -> TimeGridFunction,
{
    match cfg.method {
        Method::Cg => conjugate_gradient(apply, b, cfg),
        Method::GradientDescent => gradient_descent(apply, b, cfg),
    }
}

fn conjugate_gradient<F>(
    apply: F,
    b: &TimeGridFunction,
    cfg: &SolverConfig,
) -> Result<(TimeGridFunction, IterStats)>
where
    F: Fn(&TimeGridFunction) -> TimeGridFunction,
{
    let b_norm = b.norm();
    let mut v = TimeGridFunction::zeros(b.steps(), b.dim(), b.dt());
    if b_norm == 0.0 {
        return Ok((
            v,
            IterStats {
                iterations: 0,
                residual_history: vec![0.0],
            },
        ));
    }
    let mut r = b.clone();
    let mut d = r.clone();
    let mut rr = r.inner(&r);
    let mut history = vec![rr.sqrt() / b_norm];
    for k in 0..cfg.max_iter {
        if rr.sqrt() / b_norm <= cfg.tol {
            return Ok((
                v,
                IterStats {
                    iterations: k,
                    residual_history: history,
                },
            ));
        }
        let hd = apply(&d);
        let dhd = d.inner(&hd);
        if dhd <= 0.0 || dhd.is_nan() {
            return Err(Error::SingularOperator(format!(
                "conjugate gradient breakdown: d·Hd = {dhd:.3e} at iteration {k}"
            )));
        }
        let alpha = rr / dhd;
        v.axpy(alpha, &d);
        r.axpy(-alpha, &hd);
        let rr_next = r.inner(&r);
        history.push(rr_next.sqrt() / b_norm);
        let beta = rr_next / rr;
        let mut d_next = r.clone();
        d_next.axpy(beta, &d);
        d = d_next;
        rr = rr_next;
    }
    if rr.sqrt() / b_norm <= cfg.tol {
        return Ok((
            v,
            IterStats {
                iterations: cfg.max_iter,
                residual_history: history,
            },
        ));
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: rr.sqrt() / b_norm,
        tol: cfg.tol,
        last_iterate: Box::new(v),
    })
}

fn gradient_descent<F>(
    apply: F,
    b: &TimeGridFunction,
    cfg: &SolverConfig,
) -> Result<(TimeGridFunction, IterStats)>
where
    F: Fn(&TimeGridFunction) -> TimeGridFunction,
{
    let b_norm = b.norm();
    let mut v = TimeGridFunction::zeros(b.steps(), b.dim(), b.dt());
    if b_norm == 0.0 {
        return Ok((
            v,
            IterStats {
                iterations: 0,
                residual_history: vec![0.0],
            },
        ));
    }
    let step = match cfg.step_size {
        Some(s) => s,
        None => 0.9 / operator_norm_estimate(&apply, b),
    };
    let mut history = Vec::new();
    for k in 0..cfg.max_iter {
        let mut r = apply(&v);
        r.axpy(-1.0, b);
        let rel = r.norm() / b_norm;
        if history.is_empty() {
            history.push(rel);
        }
        if rel <= cfg.tol {
            return Ok((
                v,
                IterStats {
                    iterations: k,
                    residual_history: history,
                },
            ));
        }
        v.axpy(-step, &r);
        let mut r_next = apply(&v);
        r_next.axpy(-1.0, b);
        history.push(r_next.norm() / b_norm);
        if history.last().copied().unwrap_or(f64::INFINITY) <= cfg.tol {
            return Ok((
                v,
                IterStats {
                    iterations: k + 1,
                    residual_history: history,
                },
            ));
        }
    }
    let residual = history.last().copied().unwrap_or(1.0);
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        tol: cfg.tol,
        last_iterate: Box::new(v),
    })
}

/// Deterministic power-iteration estimate of the largest eigenvalue of the
/// SPD operator, used to pick a stable gradient-descent step.
fn operator_norm_estimate<F>(apply: &F, shape: &TimeGridFunction) -> f64
where
    F: Fn(&TimeGridFunction) -> TimeGridFunction,
{
    let mut v = TimeGridFunction::from_fn(shape.steps(), shape.dim(), shape.dt(), |s, i| {
        (1.7 * (s * shape.dim() + i) as f64 + 0.3).sin()
    });
    let mut lambda = 1.0;
    for _ in 0..100 {
        let w = apply(&v);
        let wn = w.norm();
        let vn = v.norm();
        if wn == 0.0 || vn == 0.0 {
            return 1.0;
        }
        lambda = wn / vn;
        v = w;
        let scale = 1.0 / wn;
        v.scale(scale);
    }
    lambda.max(f64::MIN_POSITIVE)
}
