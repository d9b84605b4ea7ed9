//! CSV artifact plumbing: states, controls, convergence histories, summary
//! and table files. Plain comma-separated values with a header row, '.'
//! decimals, and the row coordinate (t, beta, or datum name) first, ready
//! for gnuplot or a spreadsheet. Floats print in shortest round-trip form,
//! so identical runs produce byte-identical files.

use crate::error::{Error, Result};
use crate::evolution::{TimeGridFunction, Trajectory};
use crate::grid::Grid;
use std::path::Path;

fn map_csv(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::Format("csv i/o error".into()),
        }
    } else {
        Error::Format(e.to_string())
    }
}

fn node_headers(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(map_csv)?;
    w.write_record(header).map_err(map_csv)?;
    for row in rows {
        w.write_record(&row).map_err(map_csv)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a state trajectory: header `t,x1,..,xN`, then M+1 rows (the
/// initial state at t=0 plus every marched step).
pub fn write_state_csv(path: &Path, grid: &Grid, traj: &Trajectory) -> Result<()> {
    let nodes = node_headers(grid.n_interior);
    let header: Vec<&str> = std::iter::once("t")
        .chain(nodes.iter().map(String::as_str))
        .collect();
    write_rows(
        path,
        &header,
        (0..=grid.n_steps).map(|k| {
            let mut row = Vec::with_capacity(grid.n_interior + 1);
            row.push(grid.t(k).to_string());
            row.extend(traj.state(k).iter().map(f64::to_string));
            row
        }),
    )
}

/// Writes a control (or any space-time function): header `t,x1,..,xN`,
/// then M rows for the steps t = dt, .., T.
pub fn write_control_csv(path: &Path, grid: &Grid, v: &TimeGridFunction) -> Result<()> {
    let nodes = node_headers(grid.n_interior);
    let header: Vec<&str> = std::iter::once("t")
        .chain(nodes.iter().map(String::as_str))
        .collect();
    write_rows(
        path,
        &header,
        (0..v.steps()).map(|s| {
            let mut row = Vec::with_capacity(grid.n_interior + 1);
            row.push(grid.t(s + 1).to_string());
            row.extend(v.step(s).iter().map(f64::to_string));
            row
        }),
    )
}

/// Reads a control written by [`write_control_csv`] back, checking that the
/// shape matches the grid (M rows of N values behind the t column).
pub fn read_control_csv(path: &Path, grid: &Grid) -> Result<TimeGridFunction> {
    let mut r = csv::Reader::from_path(path).map_err(map_csv)?;
    let width = r.headers().map_err(map_csv)?.len();
    if width != grid.n_interior + 1 {
        return Err(Error::Format(format!(
            "{}: has {} columns, expected {} (t plus N = {} nodes)",
            path.display(),
            width,
            grid.n_interior + 1,
            grid.n_interior
        )));
    }
    let mut v = TimeGridFunction::zeros(grid.n_steps, grid.n_interior, grid.dt);
    let mut rows = 0usize;
    for record in r.records() {
        let record = record.map_err(map_csv)?;
        if rows >= grid.n_steps {
            rows += 1;
            continue;
        }
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".into());
        let step = v.step_mut(rows);
        for (i, field) in record.iter().skip(1).enumerate() {
            step[i] = field.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "{}: line {line}, column {}: invalid number {field:?}",
                    path.display(),
                    i + 2
                ))
            })?;
        }
        rows += 1;
    }
    if rows != grid.n_steps {
        return Err(Error::Format(format!(
            "{}: has {rows} data rows, expected M = {} steps",
            path.display(),
            grid.n_steps
        )));
    }
    Ok(v)
}

/// Writes an iteration history: header `iter,residual`, one row per entry
/// starting at iteration 0.
pub fn write_convergence_csv(path: &Path, history: &[f64]) -> Result<()> {
    write_rows(
        path,
        &["iter", "residual"],
        history
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r.to_string()]),
    )
}

/// One per-beta row of an optimal-control sweep summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    /// Tracking weight.
    pub beta: f64,
    /// Control cost |B v|_Q.
    pub control_cost: f64,
    /// Distance to the target |y - z|_Q.
    pub distance: f64,
    /// Total cost J at the returned control.
    pub cost: f64,
    /// Solver iterations.
    pub iterations: usize,
}

/// Writes the sweep summary: `beta,control_cost,distance,J,iterations`.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(
        path,
        &["beta", "control_cost", "distance", "J", "iterations"],
        rows.iter().map(|r| {
            vec![
                r.beta.to_string(),
                r.control_cost.to_string(),
                r.distance.to_string(),
                r.cost.to_string(),
                r.iterations.to_string(),
            ]
        }),
    )
}

/// One (beta, gamma) cell of a low-regret sweep.
#[derive(Debug, Clone)]
pub struct LowRegretRow {
    /// Tracking weight.
    pub beta: f64,
    /// Regret weight.
    pub gamma: f64,
    /// Low-regret cost at the returned control.
    pub j_gamma: f64,
    /// Control cost |B v|_Q.
    pub control_cost: f64,
    /// Distance |y(v,0) - z|_Q.
    pub distance: f64,
}

/// Writes the low-regret sweep table:
/// `beta,gamma,J_gamma,control_cost,distance`.
pub fn write_low_regret_csv(path: &Path, rows: &[LowRegretRow]) -> Result<()> {
    write_rows(
        path,
        &["beta", "gamma", "J_gamma", "control_cost", "distance"],
        rows.iter().map(|r| {
            vec![
                r.beta.to_string(),
                r.gamma.to_string(),
                r.j_gamma.to_string(),
                r.control_cost.to_string(),
                r.distance.to_string(),
            ]
        }),
    )
}

/// One initial datum compared across uncontrolled/optimal/supplied controls.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    /// Datum label.
    pub datum: String,
    /// Cost with v = 0.
    pub j_uncontrolled: f64,
    /// Distance with v = 0.
    pub dist_uncontrolled: f64,
    /// Cost with the per-datum optimal control.
    pub j_optimal: f64,
    /// Distance with the per-datum optimal control.
    pub dist_optimal: f64,
    /// Cost with the compared control.
    pub j_compared: f64,
    /// Distance with the compared control.
    pub dist_compared: f64,
}

/// Writes a comparison table. `compared` names the last column pair, e.g.
/// `"lowregret"` or `"supplied"`.
pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow], compared: &str) -> Result<()> {
    let j_label = format!("J_{compared}");
    let d_label = format!("dist_{compared}");
    write_rows(
        path,
        &[
            "datum",
            "J_uncontrolled",
            "dist_uncontrolled",
            "J_optimal",
            "dist_optimal",
            &j_label,
            &d_label,
        ],
        rows.iter().map(|r| {
            vec![
                r.datum.clone(),
                r.j_uncontrolled.to_string(),
                r.dist_uncontrolled.to_string(),
                r.j_optimal.to_string(),
                r.dist_optimal.to_string(),
                r.j_compared.to_string(),
                r.dist_compared.to_string(),
            ]
        }),
    )
}

/// One initial datum evaluated under a single control.
#[derive(Debug, Clone)]
pub struct EvaluationRow {
    /// Datum label.
    pub datum: String,
    /// Cost with the evaluated control.
    pub j: f64,
    /// Distance with the evaluated control.
    pub distance: f64,
}

/// Writes a single-control evaluation table: `datum,J,distance`.
pub fn write_evaluation_csv(path: &Path, rows: &[EvaluationRow]) -> Result<()> {
    write_rows(
        path,
        &["datum", "J", "distance"],
        rows.iter()
            .map(|r| vec![r.datum.clone(), r.j.to_string(), r.distance.to_string()]),
    )
}
