//! End-to-end acceptance suite. Each test prints exactly one summary line
//!
//! ```text
//! acceptance N (name): pass|FAIL - detail
//! ```
//!
//! and then asserts the criterion, so `cargo test --test acceptance --
//! --nocapture` shows the full scoreboard. The reference numbers are the
//! reference values this solver is expected to reproduce; quantitative
//! reproductions are held to 5% relative, identities to 1e-10, and the
//! dense-oracle comparisons to 1e-8.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonlocal_control::config::{FunctionSpec, KernelSpec, resolve_initial};
use nonlocal_control::linalg::dense_step_matrix;
use nonlocal_control::{
    ControlSetup, ExperimentConfig, LowRegretSetup, SolverConfig, System, TimeGridFunction,
    apply_r, apply_r_star, cost_J_gamma, evaluate_control, grad_J, grad_J_gamma, norm_q,
    solve_backward, solve_forward, solve_low_regret, solve_optimal_control,
};

// ---------------------------------------------------------------------------
// Shared fixtures and reporting helpers.
// ---------------------------------------------------------------------------

/// The reference configuration: N = 60, M = 100, T = 1, nu = 0.1,
/// control region (0.2, 0.8), target sin(2 pi x), datum 2 sin(pi x),
/// separated kernel K1 = sin(5 pi x), K2 = 20 sin(pi t) on (0, 0.5).
fn reference_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn reference_system() -> System {
    reference_config().build_system().expect("system assembly")
}

fn reference_target(sys: &System) -> TimeGridFunction {
    reference_config()
        .target_tgf(&sys.grid)
        .expect("target resolution")
}

fn reference_datum(sys: &System) -> Vec<f64> {
    reference_config()
        .initial_datum_values(&sys.grid)
        .expect("datum resolution")
}

fn named_datum(sys: &System, name: &str) -> Vec<f64> {
    resolve_initial(&FunctionSpec::Named(name.into()), &sys.grid).expect("datum resolution")
}

fn solver_cfg() -> SolverConfig {
    SolverConfig::default()
}

fn rel_dev(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
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

/// Prints the one-line verdict for a criterion and panics on failure.
fn verdict(number: usize, name: &str, passed: bool, detail: String) {
    let status = if passed { "pass" } else { "FAIL" };
    println!("acceptance {number} ({name}): {status} - {detail}");
    assert!(passed, "acceptance {number} ({name}) failed: {detail}");
}

/// Control cost reported the way the reference tables quote it.
fn control_cost(sys: &System, v: &TimeGridFunction) -> f64 {
    norm_q(&sys.grid, &v.masked(&sys.control))
}

/// Tracking distance ||y(v, y0) - target||_Q.
fn tracking_distance(
    sys: &System,
    v: &TimeGridFunction,
    y0: &[f64],
    target: &TimeGridFunction,
) -> f64 {
    let y = solve_forward(sys, v, y0).expect("forward solve").into_values();
    norm_q(&sys.grid, &y.minus(target))
}

// ---------------------------------------------------------------------------
// 1. Optimal-control cost ladder: beta in {10, 100, 1000} must land within
//    5% of the reference control costs, in under 60 s.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_optimal_cost_ladder() {
    let t0 = Instant::now();
    let sys = reference_system();
    let target = reference_target(&sys);
    let y0 = reference_datum(&sys);
    let reference = [(10.0, 1.57137), (100.0, 4.19168), (1000.0, 7.41933)];

    let mut costs = Vec::new();
    let mut worst = 0.0f64;
    for &(beta, want) in &reference {
        let setup = ControlSetup::new(beta, 1.0, target.clone(), y0.clone()).unwrap();
        let (v, _) = solve_optimal_control(&sys, &setup, &solver_cfg()).unwrap();
        let got = control_cost(&sys, &v);
        worst = worst.max(rel_dev(got, want));
        costs.push(got);
    }
    let elapsed = t0.elapsed();

    let in_tolerance = worst <= 0.05;
    let in_time = elapsed < Duration::from_secs(60);
    verdict(
        1,
        "optimal-control cost ladder",
        in_tolerance && in_time,
        format!(
            "costs [{:.5}, {:.5}, {:.5}] vs [1.57137, 4.19168, 7.41933], \
             worst deviation {:.2e} (bound 5e-2), {:.2}s (bound 60s)",
            costs[0],
            costs[1],
            costs[2],
            worst,
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Low-regret sweep table: all 11 reference (beta, gamma) cells match
//    (J^gamma, control cost, distance) within 5%, in under 3 min.
// ---------------------------------------------------------------------------

/// (beta, gamma, J^gamma, ||B v||, ||y(v,0) - target||). The (100, 0.01)
/// cell is absent from the reference table and from this sweep.
const SWEEP_TABLE: [(f64, f64, f64, f64, f64); 11] = [
    (1.0, 10.0, -0.0132321, 0.11325, 0.688434),
    (1.0, 1.0, -0.0132209, 0.113154, 0.68845),
    (1.0, 0.1, -0.0131106, 0.112213, 0.688605),
    (1.0, 0.01, -0.0121515, 0.10422, 0.689959),
    (10.0, 10.0, -1.03067, 0.882627, 0.564147),
    (10.0, 1.0, -0.968289, 0.829583, 0.572797),
    (10.0, 0.1, -0.682832, 0.631448, 0.61298),
    (10.0, 0.01, -0.43599, 0.558128, 0.648367),
    (100.0, 10.0, -27.1986, 2.37894, 0.360065),
    (100.0, 1.0, -17.9241, 2.10709, 0.500576),
    (100.0, 0.1, -14.9387, 2.15546, 0.546241),
];

#[test]
fn acceptance_2_low_regret_sweep_table() {
    let t0 = Instant::now();
    let sys = reference_system();
    let target = reference_target(&sys);

    let mut worst = 0.0f64;
    let mut worst_cell = (0.0, 0.0, "");
    for &(beta, gamma, j_ref, cost_ref, dist_ref) in &SWEEP_TABLE {
        let setup = LowRegretSetup::new(beta, 1.0, target.clone(), gamma).unwrap();
        let (v, report) = solve_low_regret(&sys, &setup, &solver_cfg()).unwrap();
        let j = report.cost_total;
        let cost = control_cost(&sys, &v);
        let dist = (report.cost_tracking / beta).sqrt();
        for (got, want, what) in [
            (j, j_ref, "J^gamma"),
            (cost, cost_ref, "control cost"),
            (dist, dist_ref, "distance"),
        ] {
            let dev = rel_dev(got, want);
            if dev > worst {
                worst = dev;
                worst_cell = (beta, gamma, what);
            }
        }
    }
    let elapsed = t0.elapsed();

    let in_tolerance = worst <= 0.05;
    let in_time = elapsed < Duration::from_secs(180);
    verdict(
        2,
        "low-regret sweep table",
        in_tolerance && in_time,
        format!(
            "11 cells x 3 values; worst deviation {:.2e} (bound 5e-2) at \
             beta={}, gamma={} ({}); {:.2}s (bound 180s)",
            worst, worst_cell.0, worst_cell.1, worst_cell.2,
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Comparison tables: evaluating the uncontrolled system, the per-datum
//    optimal control, and the shared low-regret controls (gamma = 1 and
//    gamma = 10) against the four-datum family reproduces the reference
//    rows within 5%, and J(v_opt) <= J(v_gamma) <= J(0) holds per row.
// ---------------------------------------------------------------------------

/// Per datum: (J(0), dist(0), J(v_opt), dist(v_opt), J(v_g1), dist(v_g1),
/// J(v_g10), dist(v_g10)); all at beta = 100.
const COMPARISON_TABLE: [(&str, [f64; 8]); 4] = [
    (
        "sin10",
        [27.62901, 0.74336, 8.82497, 0.28957, 17.43680, 0.55176, 11.92807, 0.42667],
    ),
    (
        "const(3)",
        [191.09119, 1.95495, 45.17162, 0.70582, 180.79790, 1.88988, 175.15713, 1.85651],
    ),
    (
        "step",
        [37.50553, 0.86609, 13.85573, 0.38048, 26.43313, 0.69597, 17.98742, 0.55067],
    ),
    (
        "mixed",
        [32.88063, 0.81093, 10.83359, 0.32834, 22.34038, 0.63444, 15.81261, 0.50965],
    ),
];

#[test]
fn acceptance_3_comparison_tables() {
    let sys = reference_system();
    let target = reference_target(&sys);
    let beta = 100.0;
    let zero = sys.zero_tgf();

    let lr1 = LowRegretSetup::new(beta, 1.0, target.clone(), 1.0).unwrap();
    let (v_g1, _) = solve_low_regret(&sys, &lr1, &solver_cfg()).unwrap();
    let lr10 = LowRegretSetup::new(beta, 1.0, target.clone(), 10.0).unwrap();
    let (v_g10, _) = solve_low_regret(&sys, &lr10, &solver_cfg()).unwrap();

    let mut worst = 0.0f64;
    let mut worst_at = ("", "");
    let mut sandwich_ok = true;
    let mut sandwich_detail = String::new();
    for (name, refs) in COMPARISON_TABLE {
        let y0 = named_datum(&sys, name);
        let setup = ControlSetup::new(beta, 1.0, target.clone(), y0.clone()).unwrap();
        let (v_opt, _) = solve_optimal_control(&sys, &setup, &solver_cfg()).unwrap();

        let (j0, d0) = evaluate_control(&sys, &zero, &y0, beta, &target).unwrap();
        let (j_opt, d_opt) = evaluate_control(&sys, &v_opt, &y0, beta, &target).unwrap();
        let (j_g1, d_g1) = evaluate_control(&sys, &v_g1, &y0, beta, &target).unwrap();
        let (j_g10, d_g10) = evaluate_control(&sys, &v_g10, &y0, beta, &target).unwrap();

        let got = [j0, d0, j_opt, d_opt, j_g1, d_g1, j_g10, d_g10];
        let labels = [
            "J(0)", "dist(0)", "J(v_opt)", "dist(v_opt)",
            "J(v_g1)", "dist(v_g1)", "J(v_g10)", "dist(v_g10)",
        ];
        for ((g, w), label) in got.iter().zip(refs.iter()).zip(labels.iter()) {
            let dev = rel_dev(*g, *w);
            if dev > worst {
                worst = dev;
                worst_at = (name, *label);
            }
        }
        if !(j_opt <= j_g1 && j_g1 <= j0) {
            sandwich_ok = false;
            sandwich_detail = format!(
                "; sandwich violated at {name}: J(v_opt)={j_opt:.5}, J(v_g1)={j_g1:.5}, J(0)={j0:.5}"
            );
        }
    }

    let in_tolerance = worst <= 0.05;
    verdict(
        3,
        "comparison tables",
        in_tolerance && sandwich_ok,
        format!(
            "4 data x 8 values; worst deviation {:.2e} (bound 5e-2) at {} ({}); \
             sandwich J(v_opt) <= J(v_gamma) <= J(0) {}{}",
            worst,
            worst_at.0,
            worst_at.1,
            if sandwich_ok { "holds per row" } else { "VIOLATED" },
            sandwich_detail
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Adjoint identities at full scale: (S v, z) = (v, S* z) and the product
//    pairing identity for (R, R*), each on 20 random probes, within 1e-10,
//    in under 10 s.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_adjoint_identities() {
    let t0 = Instant::now();
    let sys = reference_system();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let weight_pairs = [(100.0, 1.0), (10.0, 0.1), (1.0, 10.0)];

    let mut worst_s = 0.0f64;
    for _ in 0..20 {
        let v = rand_tgf(&mut rng, &sys);
        let z = rand_tgf(&mut rng, &sys);
        let sv = solve_forward(&sys, &v, &vec![0.0; sys.grid.n_interior])
            .unwrap()
            .into_values();
        let sstar_z = solve_backward(&sys, &z).unwrap().masked(&sys.control);
        let gap = (sv.inner(&z) - v.inner(&sstar_z)).abs();
        worst_s = worst_s.max(gap / (v.norm() * z.norm()));
    }

    let mut worst_r = 0.0f64;
    for probe in 0..20 {
        let (beta, gamma) = weight_pairs[probe % weight_pairs.len()];
        let v = rand_tgf(&mut rng, &sys);
        let a0 = rand_vec(&mut rng, sys.grid.n_interior);
        let f = rand_tgf(&mut rng, &sys);
        let (xi1, y) = apply_r(&sys, &v, beta, gamma).unwrap();
        let lhs = xi1.iter().zip(&a0).map(|(x, a)| x * a).sum::<f64>() + y.inner(&f);
        let rstar = apply_r_star(&sys, &a0, &f, beta, gamma).unwrap();
        let rhs = v.inner(&rstar);
        let pair_norm =
            (a0.iter().map(|a| a * a).sum::<f64>() + f.inner(&f)).sqrt();
        worst_r = worst_r.max((lhs - rhs).abs() / (v.norm() * pair_norm));
    }
    let elapsed = t0.elapsed();

    let ok = worst_s <= 1e-10 && worst_r <= 1e-10 && elapsed < Duration::from_secs(10);
    verdict(
        4,
        "adjoint identities",
        ok,
        format!(
            "20 probes each at N=60, M=100: S-identity worst {:.2e}, \
             R-identity worst {:.2e} (bound 1e-10); {:.2}s (bound 10s)",
            worst_s,
            worst_r,
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Gradient checks: central finite differences of the literal (unweighted)
//    functionals against grad_J and grad_J_gamma, 10 random (point,
//    direction) pairs each, relative error within 1e-5.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_gradient_checks() {
    let sys = reference_system();
    let target = reference_target(&sys);
    let y0 = reference_datum(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 1e-4;

    // The literal tracking functional beta |y - target|^2 + mu |B v|^2 over
    // the L2_dt inner product; grad_J differentiates exactly this.
    let setup = ControlSetup::new(100.0, 1.0, target.clone(), y0.clone()).unwrap();
    let literal_j = |v: &TimeGridFunction| -> f64 {
        let y = solve_forward(&sys, v, &y0).unwrap().into_values();
        let d = y.minus(&target);
        let bv = v.masked(&sys.control);
        setup.beta * d.inner(&d) + setup.mu * bv.inner(&bv)
    };

    let mut worst_j = 0.0f64;
    for _ in 0..10 {
        let v = rand_tgf(&mut rng, &sys);
        let w = rand_tgf(&mut rng, &sys);
        let mut plus = v.clone();
        plus.axpy(eps, &w);
        let mut minus = v.clone();
        minus.axpy(-eps, &w);
        let fd = (literal_j(&plus) - literal_j(&minus)) / (2.0 * eps);
        let directional = grad_J(&sys, &setup, &v).unwrap().inner(&w);
        worst_j = worst_j.max((fd - directional).abs() / directional.abs().max(1e-12));
    }

    // The literal low-regret functional is the reported one divided by the
    // constant mesh weight h.
    let lr = LowRegretSetup::new(100.0, 1.0, target.clone(), 1.0).unwrap();
    let literal_j_gamma = |v: &TimeGridFunction| -> f64 {
        cost_J_gamma(&sys, &lr, v).unwrap().0 / sys.grid.h
    };

    let mut worst_g = 0.0f64;
    for _ in 0..10 {
        let v = rand_tgf(&mut rng, &sys);
        let w = rand_tgf(&mut rng, &sys);
        let mut plus = v.clone();
        plus.axpy(eps, &w);
        let mut minus = v.clone();
        minus.axpy(-eps, &w);
        let fd = (literal_j_gamma(&plus) - literal_j_gamma(&minus)) / (2.0 * eps);
        let directional = grad_J_gamma(&sys, &lr, &v).unwrap().inner(&w);
        worst_g = worst_g.max((fd - directional).abs() / directional.abs().max(1e-12));
    }

    let ok = worst_j <= 1e-5 && worst_g <= 1e-5;
    verdict(
        5,
        "gradient finite-difference checks",
        ok,
        format!(
            "10 pairs each: tracking gradient worst {worst_j:.2e}, \
             low-regret gradient worst {worst_g:.2e} (bound 1e-5)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Dense-oracle equivalence at N = 5, M = 4: forward/backward solves, the
//    cascade maps, and both normal-equation solutions match explicit dense
//    space-time matrix computations to 1e-8.
// ---------------------------------------------------------------------------

/// Explicit dense mirror of the space-time maps on a tiny grid.
struct DenseOracle {
    n: usize,
    m: usize,
    dt: f64,
    /// The source-to-state map: block (k, j) of `l` is E (E/dt)^(k-j) for
    /// j <= k, where E = ((1/dt) I + A)^(-1); y = l s for per-step sources s.
    l: DMatrix<f64>,
    /// Block-diagonal control mask.
    b: DMatrix<f64>,
}

impl DenseOracle {
    fn build(sys: &System) -> Self {
        let n = sys.grid.n_interior;
        let m = sys.grid.n_steps;
        let dt = sys.grid.dt;
        let nm = n * m;
        let e = dense_step_matrix(&sys.op, dt)
            .try_inverse()
            .expect("step matrix inverse");

        // Powers E (E/dt)^j, j = 0..m-1.
        let mut powers = vec![e.clone()];
        for j in 1..m {
            powers.push(&powers[j - 1] * &e / dt);
        }
        let mut l = DMatrix::<f64>::zeros(nm, nm);
        for k in 0..m {
            for j in 0..=k {
                l.view_mut((k * n, j * n), (n, n)).copy_from(&powers[k - j]);
            }
        }

        let mut b = DMatrix::<f64>::zeros(nm, nm);
        for s in 0..m {
            for (i, &inside) in sys.control.mask.iter().enumerate() {
                if inside {
                    b[(s * n + i, s * n + i)] = 1.0;
                }
            }
        }
        Self { n, m, dt, l, b }
    }

    fn vec_of(&self, f: &TimeGridFunction) -> DVector<f64> {
        DVector::from_column_slice(f.as_slice())
    }

    /// The initial datum enters the first step as the extra source y0/dt.
    fn datum_source(&self, y0: &[f64]) -> DVector<f64> {
        let mut s = DVector::zeros(self.n * self.m);
        for (i, &val) in y0.iter().enumerate() {
            s[i] = val / self.dt;
        }
        s
    }

    fn forward(&self, v: &TimeGridFunction, y0: &[f64]) -> DVector<f64> {
        &self.l * (&self.b * self.vec_of(v) + self.datum_source(y0))
    }

    fn backward(&self, z: &TimeGridFunction) -> DVector<f64> {
        self.l.transpose() * self.vec_of(z)
    }

    /// The scaled-terminal-slot map R1 with R v = (R1 v, L B v).
    fn r1(&self, beta: f64, gamma: f64) -> DMatrix<f64> {
        let lt_l_b = self.l.transpose() * &self.l * &self.b;
        lt_l_b.rows(0, self.n) * (beta / gamma).sqrt()
    }

    fn r_star(
        &self,
        a0: &[f64],
        f: &TimeGridFunction,
        beta: f64,
        gamma: f64,
    ) -> DVector<f64> {
        let first = self.r1(beta, gamma).transpose() * DVector::from_column_slice(a0) / self.dt;
        let second = &self.b * (self.l.transpose() * self.vec_of(f));
        first + second
    }

    /// Solves H v = rhs on the masked subspace by padding the complement
    /// with the identity (the right-hand sides vanish there).
    fn solve_masked(&self, h: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        let nm = self.n * self.m;
        let padded = h + (DMatrix::<f64>::identity(nm, nm) - &self.b);
        padded.lu().solve(rhs).expect("dense normal solve")
    }

    fn normal_optimal(&self, beta: f64, mu: f64) -> DMatrix<f64> {
        let s = &self.l * &self.b;
        (s.transpose() * &s) * beta + &self.b * mu
    }

    fn normal_low_regret(&self, beta: f64, gamma: f64, mu: f64) -> DMatrix<f64> {
        let s = &self.l * &self.b;
        let r1 = self.r1(beta, gamma);
        (r1.transpose() * &r1 / self.dt + s.transpose() * &s) * beta + &self.b * mu
    }
}

fn sup_gap(a: &[f64], b: &DVector<f64>) -> f64 {
    let scale = 1.0 + b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
        / scale
}

#[test]
fn acceptance_6_dense_oracle() {
    let mut cfg = reference_config();
    cfg.grid.n = 5;
    cfg.grid.m = 4;
    let sys = cfg.build_system().unwrap();
    let target = cfg.target_tgf(&sys.grid).unwrap();
    let y0 = cfg.initial_datum_values(&sys.grid).unwrap();
    let oracle = DenseOracle::build(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (beta, gamma, mu) = (100.0, 1.0, 1.0);

    let mut worst = 0.0f64;
    let mut worst_name = "";
    let mut record = |name: &'static str, gap: f64| {
        if gap > worst {
            worst = gap;
            worst_name = name;
        }
    };

    for _ in 0..5 {
        let v = rand_tgf(&mut rng, &sys);
        let z = rand_tgf(&mut rng, &sys);
        let f = rand_tgf(&mut rng, &sys);
        let a0 = rand_vec(&mut rng, sys.grid.n_interior);
        let datum = rand_vec(&mut rng, sys.grid.n_interior);

        let y = solve_forward(&sys, &v, &datum).unwrap();
        assert_eq!(y.initial(), &datum[..]);
        record("solve_forward", sup_gap(y.values().as_slice(), &oracle.forward(&v, &datum)));

        let p = solve_backward(&sys, &z).unwrap();
        record("solve_backward", sup_gap(p.as_slice(), &oracle.backward(&z)));

        let (xi1, sv) = apply_r(&sys, &v, beta, gamma).unwrap();
        let dense_sv = oracle.forward(&v, &vec![0.0; sys.grid.n_interior]);
        let dense_xi1 = oracle.r1(beta, gamma) * oracle.vec_of(&v);
        record("apply_r state slot", sup_gap(sv.as_slice(), &dense_sv));
        record("apply_r terminal slot", sup_gap(&xi1, &dense_xi1));

        let rs = apply_r_star(&sys, &a0, &f, beta, gamma).unwrap();
        record("apply_r_star", sup_gap(rs.as_slice(), &oracle.r_star(&a0, &f, beta, gamma)));
    }

    // Both normal-equation solutions against dense solves.
    let tight = SolverConfig {
        tol: 1e-12,
        ..SolverConfig::default()
    };
    let setup = ControlSetup::new(beta, mu, target.clone(), y0.clone()).unwrap();
    let (v_opt, _) = solve_optimal_control(&sys, &setup, &tight).unwrap();
    let wbar = oracle.vec_of(&target) - oracle.forward(&sys.zero_tgf(), &y0);
    let rhs_opt = (&oracle.b * (oracle.l.transpose() * wbar)) * beta;
    let dense_opt = oracle.solve_masked(&oracle.normal_optimal(beta, mu), &rhs_opt);
    record("optimal normal equation", sup_gap(v_opt.as_slice(), &dense_opt));

    let lr = LowRegretSetup::new(beta, mu, target.clone(), gamma).unwrap();
    let (v_lr, _) = solve_low_regret(&sys, &lr, &tight).unwrap();
    let rhs_lr = (&oracle.b * (oracle.l.transpose() * oracle.vec_of(&target))) * beta;
    let dense_lr = oracle.solve_masked(&oracle.normal_low_regret(beta, gamma, mu), &rhs_lr);
    record("low-regret normal equation", sup_gap(v_lr.as_slice(), &dense_lr));

    let ok = worst <= 1e-8;
    verdict(
        6,
        "dense-oracle equivalence",
        ok,
        format!(
            "N=5, M=4, 5 random probes + both normal equations: \
             worst gap {worst:.2e} (bound 1e-8) at {worst_name}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Terminal-state asymmetry: with the nonlocal kernel, the distance
//    profile |y(T, x) - target(x)| of the optimal solution at beta = 100 is
//    asymmetric about x = 0.5, by more than 10x the same functional with
//    the kernel switched off.
// ---------------------------------------------------------------------------

fn terminal_asymmetry(cfg: &ExperimentConfig) -> f64 {
    let sys = cfg.build_system().unwrap();
    let target = cfg.target_tgf(&sys.grid).unwrap();
    let y0 = cfg.initial_datum_values(&sys.grid).unwrap();
    let setup = ControlSetup::new(100.0, 1.0, target.clone(), y0).unwrap();
    let (v, _) = solve_optimal_control(&sys, &setup, &solver_cfg()).unwrap();
    let y = solve_forward(&sys, &v, &setup.y0).unwrap();
    let terminal = y.terminal();
    let z = target.step(sys.grid.n_steps - 1);
    let n = sys.grid.n_interior;
    let d: Vec<f64> = (0..n).map(|i| (terminal[i] - z[i]).abs()).collect();
    // The grid is symmetric about 0.5: node i reflects onto node n-1-i.
    (0..n)
        .map(|i| {
            let g = d[i] - d[n - 1 - i];
            sys.grid.h * g * g
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn acceptance_7_terminal_asymmetry() {
    let cfg = reference_config();
    let mut symmetric_cfg = reference_config();
    symmetric_cfg.kernel = KernelSpec::Named("zero".into());

    let asym_nonlocal = terminal_asymmetry(&cfg);
    let asym_zero = terminal_asymmetry(&symmetric_cfg);
    let ratio = asym_nonlocal / asym_zero;

    let ok = ratio > 10.0;
    verdict(
        7,
        "terminal-state asymmetry",
        ok,
        format!(
            "asymmetry {asym_nonlocal:.6} with the nonlocal kernel vs \
             {asym_zero:.6} with the kernel off; ratio {ratio:.1} (bound 10)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Monotonicity and no-regret invariants, exactly as stated:
//    (a) along beta in {10, 100, 1000} the control cost strictly increases
//        and the tracking distance strictly decreases;
//    (b) for fixed beta, decreasing gamma yields non-increasing control
//        cost across the sweep-table ladder;
//    (c) J(v_gamma, y0) <= J(0, y0) for every datum in the comparison
//        family (v_gamma at beta = 100, gamma = 1);
//    (d) J^gamma(v) >= -beta ||target||_Q^2 on random probes.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_monotonicity_and_no_regret() {
    let sys = reference_system();
    let target = reference_target(&sys);
    let y0 = reference_datum(&sys);
    let mut failures: Vec<String> = Vec::new();

    // (a) beta-monotonicity of the optimal-control trade-off.
    let mut costs = Vec::new();
    let mut dists = Vec::new();
    for beta in [10.0, 100.0, 1000.0] {
        let setup = ControlSetup::new(beta, 1.0, target.clone(), y0.clone()).unwrap();
        let (v, _) = solve_optimal_control(&sys, &setup, &solver_cfg()).unwrap();
        costs.push(control_cost(&sys, &v));
        dists.push(tracking_distance(&sys, &v, &y0, &target));
    }
    let beta_ok = costs.windows(2).all(|w| w[1] > w[0]) && dists.windows(2).all(|w| w[1] < w[0]);
    if !beta_ok {
        failures.push(format!(
            "beta-monotonicity: costs {costs:?}, distances {dists:?} along beta = 10, 100, 1000"
        ));
    }

    // (b) gamma-monotonicity of the low-regret control cost.
    let gamma_ladder = [10.0, 1.0, 0.1, 0.01];
    for beta in [1.0, 10.0, 100.0] {
        let mut prev: Option<(f64, f64)> = None;
        for gamma in gamma_ladder {
            if beta == 100.0 && gamma == 0.01 {
                continue; // outside the reference sweep
            }
            let setup = LowRegretSetup::new(beta, 1.0, target.clone(), gamma).unwrap();
            let (v, _) = solve_low_regret(&sys, &setup, &solver_cfg()).unwrap();
            let cost = control_cost(&sys, &v);
            if let Some((prev_gamma, prev_cost)) = prev
                && cost > prev_cost
            {
                failures.push(format!(
                    "gamma-monotonicity: at beta={beta}, control cost rises from \
                     {prev_cost:.6} (gamma={prev_gamma}) to {cost:.6} (gamma={gamma}) \
                     although gamma decreased"
                ));
            }
            prev = Some((gamma, cost));
        }
    }

    // (c) The shared low-regret control never does worse than no control.
    let lr = LowRegretSetup::new(100.0, 1.0, target.clone(), 1.0).unwrap();
    let (v_g1, _) = solve_low_regret(&sys, &lr, &solver_cfg()).unwrap();
    let zero = sys.zero_tgf();
    for (name, _) in COMPARISON_TABLE {
        let datum = named_datum(&sys, name);
        let (j0, _) = evaluate_control(&sys, &zero, &datum, 100.0, &target).unwrap();
        let (j_g1, _) = evaluate_control(&sys, &v_g1, &datum, 100.0, &target).unwrap();
        if j_g1 > j0 {
            failures.push(format!(
                "no-worse property: J(v_gamma) = {j_g1:.5} exceeds J(0) = {j0:.5} for datum {name}"
            ));
        }
    }

    // (d) The low-regret functional is bounded below by -beta ||target||_Q^2.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tq = norm_q(&sys.grid, &target);
    let bound = -100.0 * tq * tq;
    for _ in 0..5 {
        let v = rand_tgf(&mut rng, &sys);
        let (j_gamma, _) = cost_J_gamma(&sys, &lr, &v).unwrap();
        if j_gamma < bound {
            failures.push(format!(
                "lower bound: J^gamma(v) = {j_gamma:.5} under -beta ||target||_Q^2 = {bound:.5}"
            ));
        }
    }

    let ok = failures.is_empty();
    verdict(
        8,
        "monotonicity and no-regret invariants",
        ok,
        if ok {
            "beta-monotonicity, gamma-monotonicity, no-worse property, and the \
             lower bound all hold"
                .into()
        } else {
            failures.join("; ")
        },
    );
}
