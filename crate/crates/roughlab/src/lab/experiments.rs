//! Experiment drivers: convergence-rate tables, contraction certificates,
//! and the refinement-stability (universal-limit) study.

use std::sync::Arc;

use serde::Serialize;

use crate::calculus;
use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::integral;
use crate::lift;
use crate::linalg;
use crate::par;
use crate::rough::RoughPath;
use crate::solver;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub trial: usize,
    /// "mesh" (subsampled-sum error) or "local" (one-step expansion error).
    pub kind: &'static str,
    pub level: usize,
    pub mesh: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesOutput {
    pub rows: Vec<RateRow>,
    /// Median across trials of the per-trial fitted slopes.
    pub slope_mesh: f64,
    pub slope_local: f64,
    /// Every trial's fit sat below the noise floor.
    pub degenerate_mesh: bool,
    pub degenerate_local: bool,
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if values.is_empty() {
        f64::NAN
    } else {
        values[values.len() / 2]
    }
}

/// Integrand for the rate experiments: `F(X)` when a field is configured,
/// otherwise the driver itself (which requires a matching shape).
fn build_integrand(
    cfg: &ExperimentConfig,
    base: &Arc<RoughPath>,
    z: &ControlledPath,
) -> Result<ControlledPath> {
    let x = ControlledPath::identity_over(base.clone());
    match &cfg.field {
        Some(spec) => {
            let field = spec.build()?;
            if field.domain_dim() != base.dim() {
                return Err(Error::Config(format!(
                    "rate integrand field domain is {}, driver dimension is {}",
                    field.domain_dim(),
                    base.dim()
                )));
            }
            if field.driver_dim() != z.rows() {
                return Err(Error::Config(format!(
                    "rate integrand field maps into {} columns, integrator has {} rows",
                    field.driver_dim(),
                    z.rows()
                )));
            }
            calculus::compose(&field, &x)
        }
        None => {
            if z.rows() != 1 || base.dim() != 1 {
                return Err(Error::Config(
                    "rates without a field need a one-dimensional driver and integrator".into(),
                ));
            }
            Ok(x)
        }
    }
}

/// Mesh-convergence and local-expansion-order regressions, one pair of fits
/// per trial, medians across trials.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<RatesOutput> {
    cfg.validate()?;
    if cfg.levels.len() < 3 {
        return Err(Error::Config(format!(
            "rates need at least 3 levels, got {}",
            cfg.levels.len()
        )));
    }
    let per_trial: Vec<Result<(Vec<RateRow>, Option<f64>, Option<f64>)>> =
        par::map_indexed(cfg.trials, |trial| {
            let base = cfg.build_driver(trial)?;
            let z = cfg.build_z(&base)?;
            let y = build_integrand(cfg, &base, &z)?;
            let mut rows = Vec::new();

            let mesh_fit = integral::mesh_convergence(&y, &z, &cfg.levels)?;
            let mut factors = cfg.levels.clone();
            factors.sort_unstable();
            factors.dedup();
            factors.reverse();
            for (&(mesh, error), &level) in mesh_fit.points.iter().zip(&factors) {
                rows.push(RateRow {
                    trial,
                    kind: "mesh",
                    level,
                    mesh,
                    error,
                });
            }

            // Local expansion order: median error over dyadic windows per
            // scale, then a log-log fit across scales.
            let n = base.grid().n_cells();
            let h = base.grid().horizon() / n as f64;
            let max_level = 6usize.min(n.trailing_zeros().saturating_sub(2) as usize);
            let mut points = Vec::new();
            for level in 1..=max_level {
                let span = n >> level;
                let mut errs: Vec<f64> = (0..n)
                    .step_by(span)
                    .map(|s| integral::local_expansion_error(&y, &z, s, s + span))
                    .collect::<Result<_>>()?;
                errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let err = errs[errs.len() / 2];
                rows.push(RateRow {
                    trial,
                    kind: "local",
                    level,
                    mesh: span as f64 * h,
                    error: err,
                });
                points.push((span as f64 * h, err));
            }
            let local_fit = integral::fit_loglog(&points)?;
            let mesh_slope = (!mesh_fit.degenerate).then_some(mesh_fit.slope);
            let local_slope = (!local_fit.degenerate).then_some(local_fit.slope);
            Ok((rows, mesh_slope, local_slope))
        });

    let mut rows = Vec::new();
    let mut mesh_slopes = Vec::new();
    let mut local_slopes = Vec::new();
    for r in per_trial {
        let (trial_rows, ms, ls) = r?;
        rows.extend(trial_rows);
        mesh_slopes.extend(ms);
        local_slopes.extend(ls);
    }
    let degenerate_mesh = mesh_slopes.is_empty();
    let degenerate_local = local_slopes.is_empty();
    Ok(RatesOutput {
        rows,
        slope_mesh: median(&mut mesh_slopes),
        slope_local: median(&mut local_slopes),
        degenerate_mesh,
        degenerate_local,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionRow {
    pub trial: usize,
    pub window_start: usize,
    pub window_end: usize,
    pub iters: usize,
    pub ratio: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionOutput {
    pub rows: Vec<ContractionRow>,
    pub all_certified: bool,
}

/// Runs the global solve per trial and reports one row per accepted window.
/// On failure, rows from completed trials are returned with the error.
pub fn run_contraction(
    cfg: &ExperimentConfig,
) -> (Vec<ContractionRow>, Result<ContractionOutput>) {
    if let Err(e) = cfg.validate() {
        return (Vec::new(), Err(e));
    }
    let per_trial: Vec<Result<Vec<ContractionRow>>> = par::map_indexed(cfg.trials, |trial| {
        let base = cfg.build_driver(trial)?;
        let z = cfg.build_z(&base)?;
        let field = cfg.build_field()?;
        let y0 = cfg.initial_value(field.domain_dim())?;
        let (_, report) = solver::solve(&field, &z, &y0, &cfg.solve_config())?;
        Ok(report
            .windows
            .into_iter()
            .map(|w| ContractionRow {
                trial,
                window_start: w.start,
                window_end: w.end,
                iters: w.iterations,
                ratio: w.contraction_ratio,
                residual: w.residual,
            })
            .collect())
    });
    let mut rows = Vec::new();
    for r in per_trial {
        match r {
            Ok(trial_rows) => rows.extend(trial_rows),
            Err(e) => return (rows, Err(e)),
        }
    }
    let all_certified = rows
        .iter()
        .all(|r| r.ratio <= solver::CONTRACTION_THRESHOLD);
    let out = ContractionOutput {
        rows: rows.clone(),
        all_certified,
    };
    (rows, Ok(out))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub trial: usize,
    /// Subsampling factor of the piecewise-linear approximant.
    pub factor: usize,
    /// Rough-path distance between driver and approximant.
    pub x_dist: f64,
    /// Controlled distance between the integrators.
    pub z_dist: f64,
    /// Controlled distance between the two solutions.
    pub y_dist: f64,
    /// `|Y_0 - Ỹ_0| + |Y'_0 - Ỹ'_0|`.
    pub y0_gap: f64,
    /// `|Z_0 - Z̃_0| + |Z'_0 - Z̃'_0|`.
    pub z0_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityOutput {
    pub rows: Vec<StabilityRow>,
}

/// Refinement-stability experiment: solves the equation over the reference
/// driver and over piecewise-linear approximants at each subsampling level,
/// reporting every distance entering the stability estimate. Rows computed
/// before a failure are returned alongside the error.
pub fn run_stability(cfg: &ExperimentConfig) -> (Vec<StabilityRow>, Result<StabilityOutput>) {
    if let Err(e) = cfg.validate() {
        return (Vec::new(), Err(e));
    }
    if cfg.levels.is_empty() {
        return (
            Vec::new(),
            Err(Error::Config("stability needs a nonempty levels list".into())),
        );
    }
    let mut factors = cfg.levels.clone();
    factors.sort_unstable();
    factors.dedup();
    factors.reverse(); // coarsest approximant first

    let per_trial: Vec<(Vec<StabilityRow>, Option<Error>)> =
        par::map_indexed(cfg.trials, |trial| {
            let mut rows = Vec::new();
            let setup = (|| -> Result<_> {
                let base = cfg.build_driver(trial)?;
                let z = cfg.build_z(&base)?;
                let field = cfg.build_field()?;
                let y0 = cfg.initial_value(field.domain_dim())?;
                let (y, _) = solver::solve(&field, &z, &y0, &cfg.solve_config())?;
                Ok((base, z, field, y0, y))
            })();
            let (base, z, field, y0, y) = match setup {
                Ok(v) => v,
                Err(e) => return (rows, Some(e)),
            };
            for &factor in &factors {
                let level = (|| -> Result<StabilityRow> {
                    let approx = Arc::new(lift::relift_linear(&base, factor)?);
                    let z_tilde = cfg.build_z(&approx)?;
                    let (y_tilde, _) =
                        solver::solve(&field, &z_tilde, &y0, &cfg.solve_config())?;
                    Ok(StabilityRow {
                        trial,
                        factor,
                        x_dist: base.rough_distance(&approx)?,
                        z_dist: z.distance(&z_tilde)?,
                        y_dist: y.distance(&y_tilde)?,
                        y0_gap: linalg::dist(y.y_at(0), y_tilde.y_at(0))
                            + linalg::dist(y.yp_at(0), y_tilde.yp_at(0)),
                        z0_gap: linalg::dist(z.y_at(0), z_tilde.y_at(0))
                            + linalg::dist(z.yp_at(0), z_tilde.yp_at(0)),
                    })
                })();
                match level {
                    Ok(row) => rows.push(row),
                    Err(e) => return (rows, Some(e)),
                }
            }
            (rows, None)
        });

    let mut rows = Vec::new();
    let mut first_err = None;
    for (trial_rows, err) in per_trial {
        rows.extend(trial_rows);
        if first_err.is_none() {
            first_err = err;
        }
    }
    match first_err {
        Some(e) => (rows, Err(e)),
        None => {
            let out = StabilityOutput { rows: rows.clone() };
            (rows, Ok(out))
        }
    }
}
