//! Experiment CLI: lifts signals, computes rough integrals, solves rough
//! differential equations, and runs the rate / contraction / stability
//! experiments from declarative JSON configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use roughlab::controlled::ControlledPath;
use roughlab::error::Error;
use roughlab::lab::config::{ExperimentConfig, OutputFormat};
use roughlab::lab::output::{
    self, contraction_csv_rows, fmt_float, rates_csv_rows, stability_csv_rows,
    CONTRACTION_HEADER, RATES_HEADER, STABILITY_HEADER,
};
use roughlab::lab::{run_contraction, run_rates, run_stability};
use roughlab::{calculus, integral, par, solver};

const CONFIG_SCHEMA_HELP: &str = r#"Config file schema (JSON, "schema": 1):
  {
    "schema": 1,
    "alpha": 0.45,              Hoelder exponent in (1/3, 1/2]
    "t": 1.0,                   horizon (default 1.0)
    "n": 1024,                  grid cells (power of two when levels given)
    "grid": "uniform",          "uniform" | "dyadic"
    "seed": 0,                  master seed; trials derive sub-seeds
    "trials": 1,
    "driver": {"kind": "bm", "d": 1},
        kinds: {"kind":"bm"} | {"kind":"fbm","hurst":H} |
               {"kind":"sin","freq":w} | {"kind":"poly","coeffs":[[...]]} |
               {"kind":"custom","samples":[...]}
    "ito": false,               true for the Ito-style (non-geometric) lift
    "field": {"name": "tanh_saturated", "m":1, "q":1, "lambda":[1.0], "sat":1.0},
        names: constant {values} | linear {lambda} |
               tanh_saturated {lambda, sat} | rotation {omega}
    "z_mode": {"mode": "identity"},
        modes: identity | integral {g: field spec} |
               custom {w, values, derivs}
    "y0": [1.0],                initial condition (solve/contraction/stability)
    "levels": [16, 8, 4, 2],    subsampling factors (rates/stability)
    "solve": {"tol": 1e-10, "max_iters": 50, "tau_shrink": 2,
              "min_window_cells": 4, "alpha": null},
    "output": {"path": "out.csv", "format": "csv"}
  }
Flags override only the seed and the output destination/format."#;

#[derive(Parser)]
#[command(
    name = "roughlab",
    about = "Rough path calculus experiments: lifts, integrals, RDE solves, rate and stability studies",
    after_long_help = CONFIG_SCHEMA_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output format.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured driver and report its Hoelder norms.
    Lift(Common),
    /// Compute the full-grid rough integral of the configured integrand.
    Integrate(Common),
    /// Solve dY = F(Y) dZ on the configured driver.
    Solve(Common),
    /// Mesh-convergence and local-expansion-order rate tables.
    Rates(Common),
    /// Per-window Picard contraction certificates.
    Contraction(Common),
    /// Refinement-stability (approximant-driver) experiment.
    Stability(Common),
}

/// Exit 2: configuration/usage problems. Exit 3: numerical failures.
fn classify(err: &Error) -> u8 {
    match err {
        Error::WindowTooLarge { .. } | Error::DriverTooRough { .. } => 3,
        Error::NonFinite(_) | Error::DerivativeCheck(_) => 3,
        _ => 2,
    }
}

fn module_of(err: &Error) -> &'static str {
    match err {
        Error::WindowTooLarge { .. } | Error::DriverTooRough { .. } => "solver",
        Error::DerivativeCheck(_) => "calculus",
        Error::NonFinite(_) => "numerics",
        _ => "config",
    }
}

struct Destination {
    path: Option<PathBuf>,
    format: OutputFormat,
}

fn destination(cfg: &ExperimentConfig, common: &Common) -> Destination {
    let mut path = cfg.output.as_ref().map(|o| PathBuf::from(&o.path));
    let mut format = cfg
        .output
        .as_ref()
        .map(|o| match o.format {
            OutputFormat::Csv => OutputFormat::Csv,
            OutputFormat::Json => OutputFormat::Json,
        })
        .unwrap_or(OutputFormat::Json);
    if let Some(out) = &common.out {
        path = Some(out.clone());
    }
    if let Some(f) = &common.format {
        format = if f == "csv" {
            OutputFormat::Csv
        } else {
            OutputFormat::Json
        };
    }
    Destination { path, format }
}

fn emit_json<T: Serialize>(dest: &Destination, value: &T) -> roughlab::Result<()> {
    match &dest.path {
        Some(p) => output::write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_csv(dest: &Destination, header: &str, rows: &[Vec<String>]) -> roughlab::Result<()> {
    match &dest.path {
        Some(p) => output::write_csv(p, header, rows),
        None => {
            println!("{header}");
            for row in rows {
                println!("{}", row.join(","));
            }
            Ok(())
        }
    }
}

fn load_config(common: &Common) -> roughlab::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", common.config.display()))
    })?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct LiftReport {
    alpha: f64,
    t: f64,
    n: usize,
    d: usize,
    geometric: bool,
    x_alpha: f64,
    xx_2alpha: f64,
}

fn cmd_lift(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let driver = cfg.build_driver(0)?;
    let report = driver.holder_norms()?;
    let lift = LiftReport {
        alpha: driver.alpha().value(),
        t: cfg.t,
        n: cfg.n,
        d: driver.dim(),
        geometric: driver.is_geometric(),
        x_alpha: report.x_alpha,
        xx_2alpha: report.xx_2alpha,
    };
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &lift),
        OutputFormat::Csv => emit_csv(
            &dest,
            "alpha,t,n,d,geometric,x_alpha,xx_2alpha",
            &[vec![
                fmt_float(lift.alpha),
                fmt_float(lift.t),
                lift.n.to_string(),
                lift.d.to_string(),
                lift.geometric.to_string(),
                fmt_float(lift.x_alpha),
                fmt_float(lift.xx_2alpha),
            ]],
        ),
    }
}

#[derive(Serialize)]
struct IntegrateReport {
    value: Vec<f64>,
    r0_2alpha: f64,
    r1_alpha: f64,
    seminorm: f64,
}

fn cmd_integrate(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let base = cfg.build_driver(0)?;
    let z = cfg.build_z(&base)?;
    let x = ControlledPath::identity_over(base.clone());
    let y = match &cfg.field {
        Some(spec) => calculus::compose(&spec.build()?, &x)?,
        None => x,
    };
    let path = integral::integral_controlled(&y, &z)?;
    let (r0, r1) = path.remainder_norms();
    let report = IntegrateReport {
        value: path.y_at(base.grid().n_cells()).to_vec(),
        r0_2alpha: r0,
        r1_alpha: r1,
        seminorm: r0 + r1,
    };
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &report),
        OutputFormat::Csv => {
            let mut row = vec![fmt_float(r0), fmt_float(r1), fmt_float(r0 + r1)];
            let mut header = String::from("r0_2alpha,r1_alpha,seminorm");
            for (i, v) in report.value.iter().enumerate() {
                header.push_str(&format!(",value_{i}"));
                row.push(fmt_float(*v));
            }
            emit_csv(&dest, &header, &[row])
        }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    terminal: Vec<f64>,
    residual: f64,
    success: bool,
    windows: usize,
    total_picard_iters: usize,
    max_contraction_ratio: f64,
}

fn cmd_solve(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let base = cfg.build_driver(0)?;
    let z = cfg.build_z(&base)?;
    let field = cfg.build_field()?;
    let y0 = cfg.initial_value(field.domain_dim())?;
    let (y, report) = solver::solve(&field, &z, &y0, &cfg.solve_config())?;
    let summary = SolveSummary {
        terminal: y.y_at(base.grid().n_cells()).to_vec(),
        residual: report.residual,
        success: report.success,
        windows: report.windows.len(),
        total_picard_iters: report.total_picard_iters,
        max_contraction_ratio: report
            .windows
            .iter()
            .map(|w| w.contraction_ratio)
            .fold(0.0, f64::max),
    };
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &summary),
        OutputFormat::Csv => {
            let mut header = String::from(
                "residual,success,windows,total_picard_iters,max_contraction_ratio",
            );
            let mut row = vec![
                fmt_float(summary.residual),
                summary.success.to_string(),
                summary.windows.to_string(),
                summary.total_picard_iters.to_string(),
                fmt_float(summary.max_contraction_ratio),
            ];
            for (i, v) in summary.terminal.iter().enumerate() {
                header.push_str(&format!(",terminal_{i}"));
                row.push(fmt_float(*v));
            }
            emit_csv(&dest, &header, &[row])
        }
    }
}

fn cmd_rates(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let out = run_rates(&cfg)?;
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &out),
        OutputFormat::Csv => emit_csv(&dest, RATES_HEADER, &rates_csv_rows(&out)),
    }
}

fn cmd_contraction(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let (rows, status) = run_contraction(&cfg);
    // Flush whatever completed, then surface any failure.
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &rows)?,
        OutputFormat::Csv => emit_csv(&dest, CONTRACTION_HEADER, &contraction_csv_rows(&rows))?,
    }
    status.map(|_| ())
}

fn cmd_stability(common: &Common) -> roughlab::Result<()> {
    let cfg = load_config(common)?;
    let dest = destination(&cfg, common);
    let (rows, status) = run_stability(&cfg);
    match dest.format {
        OutputFormat::Json => emit_json(&dest, &rows)?,
        OutputFormat::Csv => emit_csv(&dest, STABILITY_HEADER, &stability_csv_rows(&rows))?,
    }
    status.map(|_| ())
}

fn main() -> ExitCode {
    par::init_thread_pool();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lift(c) => cmd_lift(c),
        Command::Integrate(c) => cmd_integrate(c),
        Command::Solve(c) => cmd_solve(c),
        Command::Rates(c) => cmd_rates(c),
        Command::Contraction(c) => cmd_contraction(c),
        Command::Stability(c) => cmd_stability(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = classify(&e);
            if code == 3 {
                eprintln!("roughlab: numerical failure in {}: {e}", module_of(&e));
            } else {
                eprintln!("roughlab: {e}");
            }
            ExitCode::from(code)
        }
    }
}

