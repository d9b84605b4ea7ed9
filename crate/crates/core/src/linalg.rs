//! Exact O(N) solves of the per-step systems ((1/dt)I + A) x = r and their
//! transposes, via a Thomas factorization of the tridiagonal part combined
//! with a Sherman–Morrison update for the rank-one kernel part. A dense LU
//! path is available as a verification fallback.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::grid::NonlocalOperator;

/// How the per-step systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMode {
    /// Thomas factorization plus Sherman–Morrison update, O(N) per solve.
    #[default]
    Structured,
    /// Dense LU of the materialized matrix (verification fallback).
    Dense,
}

/// LU factorization of a tridiagonal matrix, reusable across solves.
#[derive(Debug, Clone)]
struct ThomasFactor {
    /// Sub-diagonal of the original matrix (length n-1).
    sub: Vec<f64>,
    /// Eliminated super-diagonal coefficients c'_i (length n-1).
    csup: Vec<f64>,
    /// Pivot denominators d_i = b_i - a_i * c'_{i-1} (length n).
    den: Vec<f64>,
}

impl ThomasFactor {
    fn new(diag: &[f64], sub: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut csup = vec![0.0; n.saturating_sub(1)];
        let mut den = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i - 1] * csup[i - 1]
            };
            if !d.is_finite() || d.abs() < f64::EPSILON {
                return Err(Error::SingularOperator(format!(
                    "tridiagonal pivot {d:.3e} at row {i}"
                )));
            }
            den[i] = d;
            if i + 1 < n {
                csup[i] = sup[i] / d;
            }
        }
        Ok(Self {
            sub: sub.to_vec(),
            csup,
            den,
        })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.den.len();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let num = if i == 0 {
                rhs[0]
            } else {
                rhs[i] - self.sub[i - 1] * x[i - 1]
            };
            x[i] = num / self.den[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.csup[i] * x[i + 1];
        }
        x
    }
}

/// One rank-one-corrected solve direction: x = (T + l r^T)^{-1} rhs computed
/// as q - l_aux * (r . q) / denom with q = T^{-1} rhs and l_aux = T^{-1} l.
#[derive(Debug, Clone)]
struct ShermanMorrison {
    thomas: ThomasFactor,
    right: Vec<f64>,
    aux: Vec<f64>,
    denom: f64,
}

impl ShermanMorrison {
    fn new(thomas: ThomasFactor, left: &[f64], right: &[f64]) -> Result<Self> {
        let aux = thomas.solve(left);
        let denom = 1.0 + right.iter().zip(&aux).map(|(a, b)| a * b).sum::<f64>();
        if !denom.is_finite() || denom.abs() < f64::EPSILON {
            return Err(Error::SingularOperator(format!(
                "Sherman–Morrison denominator {denom:.3e}"
            )));
        }
        Ok(Self {
            thomas,
            right: right.to_vec(),
            aux,
            denom,
        })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut q = self.thomas.solve(rhs);
        let dot: f64 = self.right.iter().zip(&q).map(|(a, b)| a * b).sum();
        let scale = dot / self.denom;
        for (qi, ai) in q.iter_mut().zip(&self.aux) {
            *qi -= scale * ai;
        }
        q
    }
}

#[derive(Debug)]
struct DenseFactor {
    forward: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    transposed: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

#[derive(Debug)]
struct StructuredFactor {
    forward: ShermanMorrison,
    transposed: ShermanMorrison,
}

#[derive(Debug)]
enum Backend {
    Structured(Box<StructuredFactor>),
    Dense(Box<DenseFactor>),
}

/// Reusable factorization of T = (1/dt)I + A and its transpose. Immutable
/// after construction; solves are pure and may run concurrently.
#[derive(Debug)]
pub struct StepSolver {
    n: usize,
    backend: Backend,
}

/// Factors the forward and transposed per-step systems once. The transpose
/// of A = A_D + u w^T is A_D + w u^T since A_D is symmetric.
pub fn build_step_solver(op: &NonlocalOperator, dt: f64) -> Result<StepSolver> {
    build_step_solver_with(op, dt, SolveMode::Structured)
}

/// As [`build_step_solver`], selecting the solve backend explicitly.
pub fn build_step_solver_with(
    op: &NonlocalOperator,
    dt: f64,
    mode: SolveMode,
) -> Result<StepSolver> {
    if dt <= 0.0 || dt.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = op.n();
    let backend = match mode {
        SolveMode::Structured => {
            let shifted: Vec<f64> = op.diag.iter().map(|&d| d + 1.0 / dt).collect();
            // A_D is symmetric in exact arithmetic but sub/sup are stored
            // separately, so factor T and T^T independently.
            let fwd = ThomasFactor::new(&shifted, &op.sub, &op.sup)?;
            let adj = ThomasFactor::new(&shifted, &op.sup, &op.sub)?;
            Backend::Structured(Box::new(StructuredFactor {
                forward: ShermanMorrison::new(fwd, &op.u, &op.w)?,
                transposed: ShermanMorrison::new(adj, &op.w, &op.u)?,
            }))
        }
        SolveMode::Dense => {
            let mut m = op.dense();
            for i in 0..n {
                m[(i, i)] += 1.0 / dt;
            }
            let mt = m.transpose();
            let forward = LU::new(m);
            let transposed = LU::new(mt);
            if !forward.is_invertible() || !transposed.is_invertible() {
                return Err(Error::SingularOperator(
                    "dense LU factorization failed".into(),
                ));
            }
            Backend::Dense(Box::new(DenseFactor {
                forward,
                transposed,
            }))
        }
    };
    Ok(StepSolver { n, backend })
}

impl StepSolver {
    /// Dimension N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves ((1/dt)I + A) x = rhs, or the transposed system.
    pub fn solve(&self, rhs: &[f64], transposed: bool) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "rhs has length {}, expected {}",
                rhs.len(),
                self.n
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("rhs contains non-finite entries".into()));
        }
        Ok(match &self.backend {
            Backend::Structured(f) => {
                if transposed {
                    f.transposed.solve(rhs)
                } else {
                    f.forward.solve(rhs)
                }
            }
            Backend::Dense(f) => {
                let b = DVector::from_column_slice(rhs);
                let lu = if transposed { &f.transposed } else { &f.forward };
                let x = lu
                    .solve(&b)
                    .ok_or_else(|| Error::SingularOperator("dense solve failed".into()))?;
                x.as_slice().to_vec()
            }
        })
    }
}

/// Free-function form of [`StepSolver::solve`].
pub fn solve_step(solver: &StepSolver, rhs: &[f64], transposed: bool) -> Result<Vec<f64>> {
    solver.solve(rhs, transposed)
}

/// Materializes T = (1/dt)I + A densely (verification helper).
pub fn dense_step_matrix(op: &NonlocalOperator, dt: f64) -> DMatrix<f64> {
    let mut m = op.dense();
    for i in 0..op.n() {
        m[(i, i)] += 1.0 / dt;
    }
    m
}
