//! Picard iteration for dY = F(Y) dZ driven by a controlled rough path:
//! the fixed-point map, local solves with a measured contraction
//! certificate, and the adaptively stitched global solve.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{self, VectorField};
use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::integral;
use crate::linalg;
use crate::rough::Alpha;

/// Contraction threshold from the fixed-point argument, with float slack.
pub const CONTRACTION_THRESHOLD: f64 = 0.5 + 1e-9;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Must match the driver's Hölder exponent when set; `None` adopts it.
    pub alpha: Option<Alpha>,
    /// Fixed-point tolerance in the combined value-sup + seminorm metric.
    pub tol: f64,
    /// Per-window Picard iteration cap.
    pub max_iters: usize,
    /// Window shrink factor after a too-large signal.
    pub tau_shrink: usize,
    /// Smallest admissible window, in grid cells.
    pub min_window_cells: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            alpha: None,
            tol: 1e-10,
            max_iters: 50,
            tau_shrink: 2,
            min_window_cells: 4,
        }
    }
}

impl SolveConfig {
    fn validate(&self, driver_alpha: Alpha) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.tau_shrink < 2 {
            return Err(Error::Config("tau_shrink must be at least 2".into()));
        }
        if self.min_window_cells < 1 {
            return Err(Error::Config("min_window_cells must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if a != driver_alpha {
                return Err(Error::Config(format!(
                    "config alpha {} disagrees with driver alpha {}",
                    a.value(),
                    driver_alpha.value()
                )));
            }
        }
        Ok(())
    }
}

/// Diagnostics for one accepted solve window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowRecord {
    pub start: usize,
    pub end: usize,
    pub iterations: usize,
    /// Max successive-gap ratio over the last (up to) 3 iterates.
    pub contraction_ratio: f64,
    /// Final fixed-point gap on the window.
    pub residual: f64,
    /// Successive-iterate gaps, for monotonicity diagnostics.
    pub gap_history: Vec<f64>,
    /// Set when the iterate seminorm exceeded 10x the invariant-ball radius
    /// estimate; informational, never fatal.
    pub ball_radius_exceeded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub windows: Vec<WindowRecord>,
    pub total_picard_iters: usize,
    /// Final whole-horizon residual, including the derivative identity gap.
    pub residual: f64,
    pub success: bool,
}

/// One application of the fixed-point map:
/// `M(Y) = (Y_0 + ∫_0^• F(Y) dZ, F(Y) Z')`.
pub fn picard_map(
    field: &VectorField,
    z: &ControlledPath,
    y: &ControlledPath,
) -> Result<ControlledPath> {
    check_driver(field, z)?;
    if !y.same_base(z) {
        return Err(Error::BaseMismatch);
    }
    let fy = calculus::compose(field, y)?;
    let integ = integral::integral_controlled(&fy, z)?;
    integ.shift_values(y.y_at(0))
}

fn check_driver(field: &VectorField, z: &ControlledPath) -> Result<()> {
    if z.cols() != 1 || z.rows() != field.driver_dim() {
        return Err(Error::ShapeMismatch(format!(
            "driver must be a {}-vector path, got {}x{}",
            field.driver_dim(),
            z.rows(),
            z.cols()
        )));
    }
    Ok(())
}

/// The zero-seminorm starting iterate
/// `H_t = Y_0 + F(Y_0) Z'_0 X_{0,t}`, `H'_t = F(Y_0) Z'_0`.
pub fn initial_center(
    field: &VectorField,
    y0: &[f64],
    z: &ControlledPath,
) -> Result<ControlledPath> {
    check_driver(field, z)?;
    let m = field.domain_dim();
    let q = field.driver_dim();
    if y0.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "initial value has {} entries, expected {}",
            y0.len(),
            m
        )));
    }
    let base = z.base().clone();
    let d = base.dim();
    let f0 = field.eval(y0);
    let zp0 = z.yp_at(0);
    // G_{ai} = (F(Y_0) Z'_0)_{ai}
    let mut g = vec![0.0; m * d];
    for a in 0..m {
        for i in 0..d {
            for b in 0..q {
                g[a * d + i] += f0[a * q + b] * zp0[b * d + i];
            }
        }
    }
    let nodes = base.grid().n_nodes();
    let mut values = Vec::with_capacity(nodes * m);
    let mut deriv = Vec::with_capacity(nodes * m * d);
    for k in 0..nodes {
        let xinc = base.increment(0, k);
        for a in 0..m {
            let mut v = y0[a];
            for i in 0..d {
                v += g[a * d + i] * xinc[i];
            }
            values.push(v);
        }
        deriv.extend_from_slice(&g);
    }
    ControlledPath::new(base, m, 1, values, deriv)
}

/// Combined fixed-point metric: node-value sup gap plus seminorm gap.
fn iterate_gap(a: &ControlledPath, b: &ControlledPath) -> Result<f64> {
    Ok(a.value_sup_distance(b)? + a.distance(b)?)
}

/// `max(‖Y - M(Y)‖ metric, max_t |Y'_t - (F(Y_t) Z'_t)|)`.
pub fn residual(field: &VectorField, z: &ControlledPath, y: &ControlledPath) -> Result<f64> {
    let my = picard_map(field, z, y)?;
    let gap = iterate_gap(y, &my)?;
    // M(Y)'s derivative is exactly F(Y)Z', so the identity gap is the
    // node-wise derivative distance to the mapped path.
    let nodes = y.base().grid().n_nodes();
    let mut dmax = 0.0f64;
    for k in 0..nodes {
        dmax = dmax.max(linalg::dist(y.yp_at(k), my.yp_at(k)));
    }
    Ok(gap.max(dmax))
}

/// Invariant-ball radius estimate (proof constant taken as 1); used only to
/// flag runaway iterates, never to reject them.
fn ball_radius(field: &VectorField, z: &ControlledPath, y0_deriv: &[f64]) -> Option<f64> {
    let cb2 = field.cb_norms()?.cb2();
    let xnorm = z.base().rough_norm().ok()?;
    let znorm = z.seminorm();
    let zp0 = linalg::norm(z.yp_at(0));
    let yp0 = linalg::norm(y0_deriv);
    Some(2.0 * 2.0 * cb2 * (1.0 + yp0) * (1.0 + zp0) * (1.0 + xnorm) * (1.0 + znorm))
}

fn solve_window(
    field: &VectorField,
    z: &ControlledPath,
    y0: &[f64],
    guess: Option<ControlledPath>,
    cfg: &SolveConfig,
) -> Result<(ControlledPath, WindowRecord)> {
    let n = z.base().grid().n_cells();
    let mut y = match guess {
        Some(g) => g,
        None => initial_center(field, y0, z)?,
    };
    let mut gap_history = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut diverging = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    for _ in 0..cfg.max_iters {
        let next = match picard_map(field, z, &y) {
            Ok(p) => p,
            // Overflow on a too-ambitious window is a size signal, not a bug.
            Err(Error::NonFinite(_)) => {
                return Err(Error::WindowTooLarge { start: 0, end: n })
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let gap = iterate_gap(&next, &y)?;
        if let Some(&prev) = gap_history.last() {
            if prev > cfg.tol {
                ratios.push(gap / prev);
            }
        }
        gap_history.push(gap);
        y = next;
        if gap <= cfg.tol {
            converged = true;
            break;
        }
        if gap > 1.0 && ratios.last().is_some_and(|r| *r > 1.0) {
            diverging += 1;
            if diverging >= 2 {
                return Err(Error::WindowTooLarge { start: 0, end: n });
            }
        } else {
            diverging = 0;
        }
    }
    let tail = ratios.iter().rev().take(3);
    let contraction_ratio = tail.cloned().fold(0.0f64, f64::max);
    if !converged || contraction_ratio > CONTRACTION_THRESHOLD {
        return Err(Error::WindowTooLarge { start: 0, end: n });
    }
    let ball_radius_exceeded = match ball_radius(field, z, y.yp_at(0)) {
        Some(r) => y.seminorm() > 10.0 * r,
        None => false,
    };
    let residual = *gap_history.last().unwrap_or(&0.0);
    let record = WindowRecord {
        start: 0,
        end: n,
        iterations,
        contraction_ratio,
        residual,
        gap_history,
        ball_radius_exceeded,
    };
    Ok((y, record))
}

/// Fixed-point solve on the node window `[start, end]` of `Z`'s grid,
/// starting from the zero-seminorm center. The returned path lives on the
/// restricted (time-shifted) window base.
pub fn solve_local(
    field: &VectorField,
    z: &ControlledPath,
    y0: &[f64],
    window: (usize, usize),
    cfg: &SolveConfig,
) -> Result<(ControlledPath, WindowRecord)> {
    let (start, end) = window;
    z.base().grid().check_pair(start, end)?;
    if end - start < cfg.min_window_cells {
        return Err(Error::InvalidGrid(format!(
            "window [{start}, {end}] has fewer than {} cells",
            cfg.min_window_cells
        )));
    }
    cfg.validate(z.base().alpha())?;
    let wbase = Arc::new(z.base().restrict(start, end)?);
    let zw = z.restrict(start, end, &wbase)?;
    match solve_window(field, &zw, y0, None, cfg) {
        Ok((y, mut record)) => {
            record.start = start;
            record.end = end;
            Ok((y, record))
        }
        Err(Error::WindowTooLarge { .. }) => Err(Error::WindowTooLarge { start, end }),
        Err(e) => Err(e),
    }
}

/// Global solve on the driver's whole horizon: try the full remaining range,
/// shrink by `tau_shrink` on a too-large signal, and advance with each
/// window's terminal value as the next initial condition.
pub fn solve(
    field: &VectorField,
    z: &ControlledPath,
    y0: &[f64],
    cfg: &SolveConfig,
) -> Result<(ControlledPath, SolveReport)> {
    check_driver(field, z)?;
    cfg.validate(z.base().alpha())?;
    let m = field.domain_dim();
    if y0.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "initial value has {} entries, expected {}",
            y0.len(),
            m
        )));
    }
    let base = z.base().clone();
    let n = base.grid().n_cells();
    let d = base.dim();
    let mut values = vec![0.0; (n + 1) * m];
    let mut deriv = vec![0.0; (n + 1) * m * d];
    let mut windows = Vec::new();
    let mut total_picard_iters = 0usize;
    let mut start = 0usize;
    let mut current = y0.to_vec();
    let mut guess_cells = n;
    while start < n {
        let remaining = n - start;
        let mut w = guess_cells.min(remaining);
        loop {
            match solve_local(field, z, &current, (start, start + w), cfg) {
                Ok((yw, record)) => {
                    for k in 0..=w {
                        let node = start + k;
                        values[node * m..(node + 1) * m].copy_from_slice(yw.y_at(k));
                        deriv[node * m * d..(node + 1) * m * d].copy_from_slice(yw.yp_at(k));
                    }
                    current = yw.y_at(w).to_vec();
                    total_picard_iters += record.iterations;
                    windows.push(record);
                    // Be more ambitious after a success, capped at 2x.
                    guess_cells = (2 * w).min(n);
                    start += w;
                    break;
                }
                Err(Error::WindowTooLarge { .. }) => {
                    if w <= cfg.min_window_cells {
                        return Err(Error::DriverTooRough {
                            at: start,
                            min_cells: cfg.min_window_cells,
                        });
                    }
                    w = (w / cfg.tau_shrink).max(cfg.min_window_cells);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let solution = ControlledPath::new(base, m, 1, values, deriv)?;
    let final_residual = residual(field, z, &solution)?;
    let report = SolveReport {
        windows,
        total_picard_iters,
        residual: final_residual,
        success: final_residual <= 10.0 * cfg.tol,
    };
    Ok((solution, report))
}

/// Local solve from an explicit starting iterate instead of the center;
/// used by uniqueness probes.
pub fn solve_local_from(
    field: &VectorField,
    z: &ControlledPath,
    guess: &ControlledPath,
    window: (usize, usize),
    cfg: &SolveConfig,
) -> Result<(ControlledPath, WindowRecord)> {
    let (start, end) = window;
    z.base().grid().check_pair(start, end)?;
    cfg.validate(z.base().alpha())?;
    let wbase = Arc::new(z.base().restrict(start, end)?);
    let zw = z.restrict(start, end, &wbase)?;
    let gw = guess.restrict(start, end, &wbase)?;
    let y0 = gw.y_at(0).to_vec();
    match solve_window(field, &zw, &y0, Some(gw), cfg) {
        Ok((y, mut record)) => {
            record.start = start;
            record.end = end;
            Ok((y, record))
        }
        Err(Error::WindowTooLarge { .. }) => Err(Error::WindowTooLarge { start, end }),
        Err(e) => Err(e),
    }
}
