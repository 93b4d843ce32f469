//! Compensated Riemann sums and the level-2 rough integral of one controlled
//! path against another, plus the rate diagnostics built on top of it.

use serde::{Deserialize, Serialize};

use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::kahan::CompensatedVec;
use crate::linalg;

/// Noise floor below which an error is floating-point dust, not signal;
/// log-log fits discard such points.
pub const RATE_NOISE_FLOOR: f64 = 1e-13;

/// Least-squares exponent fitted to (scale, error) pairs on log-log axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    /// (scale, error) pairs, scales strictly decreasing.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Set when too few errors sit above the noise floor to fit a slope
    /// (e.g. an exactly-representable integrand); slope is 0 in that case.
    pub degenerate: bool,
}

/// Fits `log error = slope * log scale + intercept` by least squares,
/// ignoring errors below the noise floor.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidGrid(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::InvalidGrid(
                "rate fit scales must be strictly decreasing".into(),
            ));
        }
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(s, e)| *s > 0.0 && *e >= RATE_NOISE_FLOOR)
        .map(|&(s, e)| (s.ln(), e.ln()))
        .collect();
    if usable.len() < 2 {
        return Ok(RateFit {
            points: points.to_vec(),
            slope: 0.0,
            intercept: 0.0,
            r2: 0.0,
            degenerate: true,
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    if !slope.is_finite() {
        return Err(Error::NonFinite("rate fit slope".into()));
    }
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        r2,
        degenerate: false,
    })
}

/// `Y` must be L(W,U)-valued over the same base as the W-valued `Z`.
fn check_integrand_pair(y: &ControlledPath, z: &ControlledPath) -> Result<()> {
    if !y.same_base(z) {
        return Err(Error::BaseMismatch);
    }
    if z.cols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "integrator must be vector-valued, has {} columns",
            z.cols()
        )));
    }
    if y.cols() != z.rows() {
        return Err(Error::ShapeMismatch(format!(
            "integrand is {}x{} but integrator is {}-dimensional",
            y.rows(),
            y.cols(),
            z.rows()
        )));
    }
    Ok(())
}

fn check_nodes(nodes: &[usize], n_cells: usize) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::BadNodeList);
    }
    for w in nodes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::BadNodeList);
        }
    }
    if *nodes.last().unwrap() > n_cells {
        return Err(Error::IndexOutOfRange {
            index: *nodes.last().unwrap(),
            nodes: n_cells + 1,
        });
    }
    Ok(())
}

/// One compensated term `Y_p Z_{p,q} + Y'_p Z'_p 𝕏_{p,q}`, pushed into `acc`.
fn add_pair_term(
    y: &ControlledPath,
    z: &ControlledPath,
    p: usize,
    q: usize,
    acc: &mut CompensatedVec,
) -> Result<()> {
    let u = y.rows();
    let w = y.cols();
    let d = y.base().dim();
    let (_, xx) = y.base().chen_pair(p, q)?;
    let zinc = linalg::sub(z.y_at(q), z.y_at(p));
    let yv = y.y_at(p);
    let yp = y.yp_at(p);
    let zp = z.yp_at(p);
    for a in 0..u {
        let mut v = 0.0;
        for b in 0..w {
            v += yv[a * w + b] * zinc[b];
        }
        for b in 0..w {
            for i in 0..d {
                let c = yp[(a * w + b) * d + i];
                if c == 0.0 {
                    continue;
                }
                for j in 0..d {
                    v += c * zp[b * d + j] * xx[i * d + j];
                }
            }
        }
        acc.add(a, v);
    }
    Ok(())
}

/// Compensated Riemann sum `Σ Y_p Z_{p,q} + Y'_p Z'_p 𝕏_{p,q}` over the
/// consecutive pairs of `nodes`, accumulated left-to-right with error
/// compensation. Second-level data over each pair comes from Chen chaining.
pub fn compensated_sum(
    y: &ControlledPath,
    z: &ControlledPath,
    nodes: &[usize],
) -> Result<Vec<f64>> {
    check_integrand_pair(y, z)?;
    check_nodes(nodes, y.base().grid().n_cells())?;
    let mut acc = CompensatedVec::zeros(y.rows());
    for w in nodes.windows(2) {
        add_pair_term(y, z, w[0], w[1], &mut acc)?;
    }
    Ok(acc.values())
}

/// `∫_{t_i}^{t_j} Y dZ`: the compensated sum over every grid node in the
/// interval — the finest partition available, hence the grid-native value of
/// the rough integral. Additive in the interval by construction.
pub fn rough_integral(
    y: &ControlledPath,
    z: &ControlledPath,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    check_integrand_pair(y, z)?;
    y.base().grid().check_pair(i, j)?;
    if i == j {
        return Ok(vec![0.0; y.rows()]);
    }
    let nodes: Vec<usize> = (i..=j).collect();
    compensated_sum(y, z, &nodes)
}

/// `(∫_0^• Y dZ, Y Z')` as a controlled path over the same base. The value
/// path is the running full-grid sum; the derivative is the contraction
/// `(Y Z')_{ai} = Σ_b Y_{ab} Z'_{bi}`.
pub fn integral_controlled(y: &ControlledPath, z: &ControlledPath) -> Result<ControlledPath> {
    check_integrand_pair(y, z)?;
    let n = y.base().grid().n_cells();
    let u = y.rows();
    let w = y.cols();
    let d = y.base().dim();
    let mut values = Vec::with_capacity((n + 1) * u);
    let mut acc = CompensatedVec::zeros(u);
    values.extend_from_slice(&acc.values());
    for k in 0..n {
        add_pair_term(y, z, k, k + 1, &mut acc)?;
        values.extend_from_slice(&acc.values());
    }
    let mut deriv = Vec::with_capacity((n + 1) * u * d);
    for k in 0..=n {
        let yv = y.y_at(k);
        let zp = z.yp_at(k);
        for a in 0..u {
            for i in 0..d {
                let mut v = 0.0;
                for b in 0..w {
                    v += yv[a * w + b] * zp[b * d + i];
                }
                deriv.push(v);
            }
        }
    }
    ControlledPath::new(y.base().clone(), u, 1, values, deriv)
}

/// `|∫_{t_i}^{t_j} Y dZ - Y_i Z_{i,j} - Y'_i Z'_i 𝕏_{i,j}|`: the gap between
/// the integral and its one-step expansion frozen at the left endpoint.
pub fn local_expansion_error(
    y: &ControlledPath,
    z: &ControlledPath,
    i: usize,
    j: usize,
) -> Result<f64> {
    if i >= j {
        return Err(Error::UnorderedIndices { i, j });
    }
    let full = rough_integral(y, z, i, j)?;
    let one_step = compensated_sum(y, z, &[i, j])?;
    Ok(linalg::dist(&full, &one_step))
}

/// Subsampling errors of the compensated sum against the full-grid integral,
/// fitted on log-log axes against the mesh size. Each factor must divide the
/// cell count.
pub fn mesh_convergence(
    y: &ControlledPath,
    z: &ControlledPath,
    levels: &[usize],
) -> Result<RateFit> {
    if levels.len() < 3 {
        return Err(Error::InvalidGrid(format!(
            "mesh_convergence needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let grid = y.base().grid();
    let n = grid.n_cells();
    let truth = rough_integral(y, z, 0, n)?;
    let mut factors = levels.to_vec();
    factors.sort_unstable();
    factors.dedup();
    factors.reverse(); // coarsest (largest mesh) first => scales decreasing
    let mut points = Vec::with_capacity(factors.len());
    for &f in &factors {
        if f == 0 || n % f != 0 {
            return Err(Error::NonDivisorFactor { factor: f, n });
        }
        let nodes: Vec<usize> = (0..=n / f).map(|k| k * f).collect();
        let approx = compensated_sum(y, z, &nodes)?;
        let mesh = f as f64 * grid.horizon() / n as f64;
        points.push((mesh, linalg::dist(&approx, &truth)));
    }
    fit_loglog(&points)
}
