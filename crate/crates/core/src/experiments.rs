//! Experiment runners behind the CLI subcommands: each takes a validated
//! configuration, runs the solves (sweep cells in parallel when the
//! `parallel` feature is on), and writes CSV artifacts into the output
//! directory.

use crate::config::{ExperimentConfig, cross_minus_skips, resolve_initial};
use crate::csv_io::{
    ComparisonRow, EvaluationRow, LowRegretRow, SummaryRow, read_control_csv,
    write_comparison_csv, write_control_csv, write_convergence_csv, write_evaluation_csv,
    write_low_regret_csv, write_state_csv, write_summary_csv,
};
use crate::error::{Error, Result};
use crate::evolution::{System, TimeGridFunction, norm_q, solve_forward};
use crate::low_regret::{LowRegretSetup, evaluate_control, solve_low_regret};
use crate::optimal::{ControlSetup, cost_J, solve_optimal_control};
use std::path::{Path, PathBuf};

/// Maps `f` over the cells in parallel (rayon), preserving order.
#[cfg(feature = "parallel")]
pub fn run_cells<T, R, F>(cells: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    cells.par_iter().map(f).collect()
}

/// Maps `f` over the cells sequentially (the `parallel` feature is off).
#[cfg(not(feature = "parallel"))]
pub fn run_cells<T, R, F>(cells: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    cells.iter().map(f).collect()
}

/// Sequential reference version of [`run_cells`], kept for benchmarking the
/// parallel sweep against.
pub fn run_cells_sequential<T, R, F>(cells: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    cells.iter().map(f).collect()
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// The control as stored on disk: masked to the control region when the
/// configuration asks for it.
fn storable(cfg: &ExperimentConfig, sys: &System, v: &TimeGridFunction) -> TimeGridFunction {
    if cfg.solver.mask_control {
        v.masked(&sys.control)
    } else {
        v.clone()
    }
}

/// Marches the uncontrolled system and writes `uncontrolled_state.csv`.
pub fn cmd_uncontrolled(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let sys = cfg.build_system()?;
    let y0 = cfg.initial_datum_values(&sys.grid)?;
    let traj = sys.march_free(&y0)?;
    ensure_dir(out)?;
    let path = out.join("uncontrolled_state.csv");
    write_state_csv(&path, &sys.grid, &traj)?;
    Ok(path)
}

/// Solves the tracking problem for every beta in the configuration and
/// writes per-beta state/control/convergence files plus `summary.csv`.
/// Non-convergence on one beta is reported and the sweep continues; the
/// first such error is returned at the end.
pub fn cmd_optimal(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SummaryRow>> {
    let sys = cfg.build_system()?;
    let y0 = cfg.initial_datum_values(&sys.grid)?;
    let target = cfg.target_tgf(&sys.grid)?;
    ensure_dir(out)?;
    let scfg = cfg.solver.solver_config();

    let results = run_cells(&cfg.betas, |&beta| -> Result<SummaryRow> {
        let setup = ControlSetup::new(beta, cfg.mu, target.clone(), y0.clone())?;
        let (v, report) = solve_optimal_control(&sys, &setup, &scfg)?;
        let traj = solve_forward(&sys, &v, &y0)?;
        let dist = norm_q(&sys.grid, &traj.values().minus(&target));
        let cost = norm_q(&sys.grid, &v.masked(&sys.control));
        write_state_csv(&out.join(format!("state_beta{beta}.csv")), &sys.grid, &traj)?;
        write_control_csv(
            &out.join(format!("control_beta{beta}.csv")),
            &sys.grid,
            &storable(cfg, &sys, &v),
        )?;
        write_convergence_csv(
            &out.join(format!("convergence_beta{beta}.csv")),
            &report.residual_history,
        )?;
        Ok(SummaryRow {
            beta,
            control_cost: cost,
            distance: dist,
            cost: report.cost_total,
            iterations: report.iterations,
        })
    });

    let mut rows = Vec::new();
    let mut first_nonconv: Option<Error> = None;
    for (cell, result) in cfg.betas.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e @ Error::NonConvergence { .. }) => {
                eprintln!("beta {cell}: {e}");
                first_nonconv.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    write_summary_csv(&out.join("summary.csv"), &rows)?;
    match first_nonconv {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

fn low_regret_cell(
    sys: &System,
    cfg: &ExperimentConfig,
    target: &TimeGridFunction,
    beta: f64,
    gamma: f64,
    out: &Path,
) -> Result<LowRegretRow> {
    let setup = LowRegretSetup::new(beta, cfg.mu, target.clone(), gamma)?;
    let (v, report) = solve_low_regret(sys, &setup, &cfg.solver.solver_config())?;
    write_control_csv(
        &out.join(format!("control_beta{beta}_gamma{gamma}.csv")),
        &sys.grid,
        &storable(cfg, sys, &v),
    )?;
    Ok(LowRegretRow {
        beta,
        gamma,
        j_gamma: report.cost_total,
        control_cost: (report.cost_control / cfg.mu).sqrt(),
        distance: (report.cost_tracking / beta).sqrt(),
    })
}

fn collect_low_regret(
    cells: &[(f64, f64)],
    results: Vec<Result<LowRegretRow>>,
) -> Result<Vec<LowRegretRow>> {
    let mut rows = Vec::new();
    let mut first_nonconv: Option<Error> = None;
    for (&(beta, gamma), result) in cells.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e @ Error::NonConvergence { .. }) => {
                eprintln!("beta {beta}, gamma {gamma}: {e}");
                first_nonconv.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    match first_nonconv {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

/// Solves the low-regret problem over the (beta, gamma) sweep and writes
/// `low_regret_table.csv` plus per-cell control files. Cells run in
/// parallel; non-convergence is handled as in [`cmd_optimal`].
pub fn cmd_low_regret(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<LowRegretRow>> {
    let sys = cfg.build_system()?;
    let target = cfg.target_tgf(&sys.grid)?;
    ensure_dir(out)?;
    let cells = cfg.sweep_cells();
    let results = run_cells(&cells, |&(beta, gamma)| {
        low_regret_cell(&sys, cfg, &target, beta, gamma, out)
    });
    let rows = collect_low_regret(&cells, results)?;
    write_low_regret_csv(&out.join("low_regret_table.csv"), &rows)?;
    Ok(rows)
}

/// Builds the comparison rows for the evaluation-data family against a
/// fixed compared control: uncontrolled, per-datum optimal (solved at
/// `beta`), and the compared control itself.
fn comparison_rows(
    sys: &System,
    cfg: &ExperimentConfig,
    target: &TimeGridFunction,
    beta: f64,
    compared: &TimeGridFunction,
) -> Result<Vec<ComparisonRow>> {
    let scfg = cfg.solver.solver_config();
    let mut rows = Vec::new();
    for spec in &cfg.evaluation_data {
        let y0 = resolve_initial(spec, &sys.grid)?;
        let setup = ControlSetup::new(beta, cfg.mu, target.clone(), y0.clone())?;
        let zero = sys.zero_tgf();
        let (j0, r0) = cost_J(sys, &setup, &zero)?;
        let (_, opt_report) = solve_optimal_control(sys, &setup, &scfg)?;
        let (j_cmp, r_cmp) = cost_J(sys, &setup, compared)?;
        rows.push(ComparisonRow {
            datum: spec.label(),
            j_uncontrolled: j0,
            dist_uncontrolled: (2.0 * r0.cost_tracking / beta).sqrt(),
            j_optimal: opt_report.cost_total,
            dist_optimal: (2.0 * opt_report.cost_tracking / beta).sqrt(),
            j_compared: j_cmp,
            dist_compared: (2.0 * r_cmp.cost_tracking / beta).sqrt(),
        });
    }
    Ok(rows)
}

/// Evaluates a stored control against the configuration's evaluation data
/// and writes `evaluation.csv` (same shape as the comparison tables, with
/// the supplied control in the last column pair).
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    control_file: &Path,
    out: &Path,
) -> Result<Vec<ComparisonRow>> {
    let sys = cfg.build_system()?;
    let target = cfg.target_tgf(&sys.grid)?;
    let v = read_control_csv(control_file, &sys.grid)?;
    ensure_dir(out)?;
    let rows = comparison_rows(&sys, cfg, &target, cfg.betas[0], &v)?;
    write_comparison_csv(&out.join("evaluation.csv"), &rows, "supplied")?;
    Ok(rows)
}

/// Reproduces the three reference tables: the low-regret sweep over
/// beta in {1,10,100} x gamma in {10,1,0.1,0.01} (minus skipped cells),
/// the comparison of the low-regret control (beta=100, gamma=1) against
/// per-datum optima, and the same comparison for gamma=10. Writes
/// `table1.csv`, `table2.csv`, `table3.csv`.
pub fn cmd_tables(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Vec<LowRegretRow>, Vec<ComparisonRow>, Vec<EvaluationRow>)> {
    let sys = cfg.build_system()?;
    let target = cfg.target_tgf(&sys.grid)?;
    ensure_dir(out)?;

    let cells = cross_minus_skips(
        &[1.0, 10.0, 100.0],
        &[10.0, 1.0, 0.1, 0.01],
        &cfg.skip_cells,
    );
    let results = run_cells(&cells, |&(beta, gamma)| {
        low_regret_cell(&sys, cfg, &target, beta, gamma, out)
    });
    let table1 = collect_low_regret(&cells, results)?;
    write_low_regret_csv(&out.join("table1.csv"), &table1)?;

    let scfg = cfg.solver.solver_config();
    let beta = 100.0;
    let lr_setup = LowRegretSetup::new(beta, cfg.mu, target.clone(), 1.0)?;
    let (v_gamma, _) = solve_low_regret(&sys, &lr_setup, &scfg)?;
    let table2 = comparison_rows(&sys, cfg, &target, beta, &v_gamma)?;
    write_comparison_csv(&out.join("table2.csv"), &table2, "lowregret")?;

    let lr10_setup = LowRegretSetup::new(beta, cfg.mu, target.clone(), 10.0)?;
    let (v_gamma10, _) = solve_low_regret(&sys, &lr10_setup, &scfg)?;
    let mut table3 = Vec::new();
    for spec in &cfg.evaluation_data {
        let y0 = resolve_initial(spec, &sys.grid)?;
        let (j, dist) = evaluate_control(&sys, &v_gamma10, &y0, beta, &target)?;
        table3.push(EvaluationRow {
            datum: spec.label(),
            j,
            distance: dist,
        });
    }
    write_evaluation_csv(&out.join("table3.csv"), &table3)?;

    Ok((table1, table2, table3))
}
