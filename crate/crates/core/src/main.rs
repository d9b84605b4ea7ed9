//! Command-line front end: runs the experiments described by a JSON
//! configuration and writes CSV artifacts.

use clap::{Parser, Subcommand, ValueEnum};
use nonlocal_control::config::{ExperimentConfig, load_config};
use nonlocal_control::diagnostics::run_checks;
use nonlocal_control::experiments::{
    cmd_evaluate, cmd_low_regret, cmd_optimal, cmd_tables, cmd_uncontrolled,
};
use nonlocal_control::solver::Method;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Conjugate gradients.
    Cg,
    /// Gradient descent.
    Gd,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cg => Method::Cg,
            MethodArg::Gd => Method::GradientDescent,
        }
    }
}

/// Optimal and low-regret control experiments for a nonlocal heat equation.
#[derive(Debug, Parser)]
#[command(name = "nonlocal-control", version, about)]
struct Cli {
    /// JSON configuration file (defaults to the built-in reference setup).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV artifacts (default: config output_dir or ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweep cells (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,

    /// Override the configured iterative method.
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,

    /// Override the configured relative-residual tolerance.
    #[arg(long, global = true, value_name = "R")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// March the uncontrolled system and store the state trajectory.
    Uncontrolled,
    /// Solve the tracking problem for every configured beta.
    Optimal,
    /// Solve the low-regret problem over the (beta, gamma) sweep.
    LowRegret,
    /// Evaluate a stored control CSV against the evaluation data family.
    Evaluate {
        /// Control CSV to evaluate (as written by `optimal`/`low-regret`).
        control_file: PathBuf,
    },
    /// Reproduce the three reference tables.
    Tables,
    /// Run the numerical self-tests and report each outcome.
    Check,
}

fn run(cli: Cli) -> nonlocal_control::Result<u8> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(method) = cli.method {
        cfg.solver.method = method.into();
    }
    if let Some(tol) = cli.tol {
        cfg.solver.tol = tol;
    }
    cfg.validate()?;

    #[cfg(feature = "parallel")]
    if let Some(workers) = cli.workers
        && workers > 0
    {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.workers;

    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    match &cli.command {
        Command::Uncontrolled => {
            cmd_uncontrolled(&cfg, &out)?;
        }
        Command::Optimal => {
            cmd_optimal(&cfg, &out)?;
        }
        Command::LowRegret => {
            cmd_low_regret(&cfg, &out)?;
        }
        Command::Evaluate { control_file } => {
            cmd_evaluate(&cfg, control_file, &out)?;
        }
        Command::Tables => {
            cmd_tables(&cfg, &out)?;
        }
        Command::Check => {
            let outcomes = run_checks(&cfg)?;
            let mut all_ok = true;
            for o in &outcomes {
                let status = if o.passed { "ok" } else { "FAIL" };
                println!("check {:<28} {status:<4} {}", o.name, o.detail);
                all_ok &= o.passed;
            }
            if !all_ok {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
