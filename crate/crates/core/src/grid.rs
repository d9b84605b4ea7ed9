//! Space-time grid and assembly of the discrete operators: the tridiagonal
//! diffusion matrix, the rank-one nonlocal part, and the diagonal control
//! operator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Uniform space-time mesh on (0,1) x (0,T) with Dirichlet boundaries.
///
/// `n_interior` interior nodes x_i = i*h (i = 1..=N, h = 1/(N+1)) and
/// `n_steps` implicit-Euler steps t_n = n*dt (n = 0..=M, dt = T/M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Number of interior spatial nodes N.
    pub n_interior: usize,
    /// Number of time steps M.
    pub n_steps: usize,
    /// Spatial mesh size h = 1/(N+1).
    pub h: f64,
    /// Time step dt = T/M.
    pub dt: f64,
    /// Final time T.
    pub horizon: f64,
    /// Diffusion coefficient nu >= 0.
    pub nu: f64,
}

impl Grid {
    /// Coordinate of interior node `i` for `i` in `0..n_interior`
    /// (x = (i+1)*h; node numbering in formulas is 1-based).
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    /// All interior node coordinates.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_interior).map(|i| self.x(i)).collect()
    }

    /// Time at step `n` for `n` in `0..=n_steps`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Builds the grid from the discretization parameters.
pub fn build_grid(n_interior: usize, n_steps: usize, horizon: f64, nu: f64) -> Result<Grid> {
    if n_interior == 0 {
        return Err(Error::InvalidArgument("n_interior must be >= 1".into()));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if horizon <= 0.0 || horizon.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if nu < 0.0 || nu.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "nu must be nonnegative, got {nu}"
        )));
    }
    Ok(Grid {
        n_interior,
        n_steps,
        h: 1.0 / (n_interior as f64 + 1.0),
        dt: horizon / n_steps as f64,
        horizon,
        nu,
    })
}

/// Node samples of a separated kernel K(x,theta) = K1(x) * K2(theta).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedKernel {
    /// K1 sampled at the interior nodes.
    pub k1: Vec<f64>,
    /// K2 sampled at the interior nodes.
    pub k2: Vec<f64>,
}

/// Samples both kernel factors at the interior nodes. Discontinuous factors
/// are evaluated pointwise; no cell averaging is applied.
pub fn sample_kernel(
    k1: impl Fn(f64) -> f64,
    k2: impl Fn(f64) -> f64,
    grid: &Grid,
) -> Result<SeparatedKernel> {
    let sample = |f: &dyn Fn(f64) -> f64, name: &str| -> Result<Vec<f64>> {
        let v: Vec<f64> = grid.xs().iter().map(|&x| f(x)).collect();
        if let Some((i, bad)) = v.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "{name} evaluates to {bad} at node x = {}",
                grid.x(i)
            )));
        }
        Ok(v)
    };
    Ok(SeparatedKernel {
        k1: sample(&k1, "K1")?,
        k2: sample(&k2, "K2")?,
    })
}

/// The discrete operator A = A_D + u w^T: a constant-coefficient tridiagonal
/// diffusion part plus a rank-one nonlocal part with u = K1 samples and
/// w = h * K2 samples. Applications stay O(N); the dense form exists only
/// for verification.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalOperator {
    /// Main diagonal of A_D (length N).
    pub diag: Vec<f64>,
    /// Sub-diagonal of A_D (length N-1).
    pub sub: Vec<f64>,
    /// Super-diagonal of A_D (length N-1).
    pub sup: Vec<f64>,
    /// Rank-one left factor (K1 samples).
    pub u: Vec<f64>,
    /// Rank-one right factor (h * K2 samples).
    pub w: Vec<f64>,
}

impl NonlocalOperator {
    /// Dimension N.
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Applies A (or A^T when `transposed`) to `y` in O(N). The transpose
    /// swaps the rank-one factors; A_D is symmetric.
    pub fn apply(&self, y: &[f64], transposed: bool) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(y.len(), n);
        let (left, right) = if transposed {
            (&self.w, &self.u)
        } else {
            (&self.u, &self.w)
        };
        let dot: f64 = right.iter().zip(y).map(|(a, b)| a * b).sum();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * y[i];
            if i > 0 {
                s += self.sub[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * y[i + 1];
            }
            out[i] = s + left[i] * dot;
        }
        out
    }

    /// Dense materialization of A (verification only; never used in solves).
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.sub[i - 1];
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.sup[i];
            }
            for j in 0..n {
                m[(i, j)] += self.u[i] * self.w[j];
            }
        }
        m
    }
}

/// Assembles A = A_D + u w^T on `grid` from kernel samples: the diffusion
/// part has diagonal 2*nu/h^2 and off-diagonals -nu/h^2, and the rank-one
/// part uses u = k1 and w = h * k2.
pub fn assemble_operator(grid: &Grid, kernel: &SeparatedKernel) -> Result<NonlocalOperator> {
    let n = grid.n_interior;
    if kernel.k1.len() != n || kernel.k2.len() != n {
        return Err(Error::InvalidArgument(format!(
            "kernel sampled on {} nodes, grid has {} interior nodes",
            kernel.k1.len(),
            n
        )));
    }
    let scale = grid.nu / (grid.h * grid.h);
    Ok(NonlocalOperator {
        diag: vec![2.0 * scale; n],
        sub: vec![-scale; n.saturating_sub(1)],
        sup: vec![-scale; n.saturating_sub(1)],
        u: kernel.k1.clone(),
        w: kernel.k2.iter().map(|&v| grid.h * v).collect(),
    })
}

/// Diagonal 0/1 control operator: the indicator of the control region
/// restricted to the interior nodes. Idempotent and symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOperator {
    /// `mask[i]` is true iff node x_{i+1} lies strictly inside the region.
    pub mask: Vec<bool>,
}

impl ControlOperator {
    /// Zeroes the entries outside the control region (returns a new vector).
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.mask.len());
        y.iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect()
    }

    /// Zeroes the entries outside the control region in place.
    pub fn apply_in_place(&self, y: &mut [f64]) {
        debug_assert_eq!(y.len(), self.mask.len());
        for (v, &m) in y.iter_mut().zip(&self.mask) {
            if !m {
                *v = 0.0;
            }
        }
    }

    /// Number of nodes inside the region.
    pub fn active(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Builds the control operator for the open interval `(a, b)`; node
/// membership uses strict inequalities.
pub fn assemble_control(grid: &Grid, a: f64, b: f64) -> Result<ControlOperator> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "control region must satisfy 0 <= a < b <= 1, got ({a}, {b})"
        )));
    }
    let mask: Vec<bool> = grid.xs().iter().map(|&x| a < x && x < b).collect();
    if mask.iter().all(|&m| !m) {
        return Err(Error::EmptyControlRegion(a, b));
    }
    Ok(ControlOperator { mask })
}
