//! Signal generation and level-2 lifts: sampled first-level paths promoted to
//! rough paths, plus the coarsen / re-lift machinery for refinement studies.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg;
use crate::rng;
use crate::rough::{Alpha, RoughPath};

/// Dense-Cholesky budget for the fractional sampler.
pub const FBM_MAX_CELLS: usize = 1 << 13;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalKind {
    /// Brownian motion, independent Gaussian increments of variance `dt`.
    Bm,
    /// Fractional Brownian motion with exact covariance (dense Cholesky).
    Fbm { hurst: f64 },
    /// `X^k_t = sin(freq * t + k * pi/2)` per coordinate.
    Sin { freq: f64 },
    /// Polynomial in `t`; one coefficient list (ascending powers) per coordinate.
    Poly { coeffs: Vec<Vec<f64>> },
    /// Explicit node values, length `(n+1) * d` node-major.
    Custom { samples: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub kind: SignalKind,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SignalSpec {
    pub fn bm(d: usize, seed: u64) -> SignalSpec {
        SignalSpec {
            kind: SignalKind::Bm,
            d,
            seed,
        }
    }

    pub fn fbm(d: usize, hurst: f64, seed: u64) -> SignalSpec {
        SignalSpec {
            kind: SignalKind::Fbm { hurst },
            d,
            seed,
        }
    }

    pub fn sin(d: usize, freq: f64) -> SignalSpec {
        SignalSpec {
            kind: SignalKind::Sin { freq },
            d,
            seed: 0,
        }
    }

    /// Same spec with the seed replaced (used for per-trial derivation).
    pub fn with_seed(&self, seed: u64) -> SignalSpec {
        SignalSpec {
            kind: self.kind.clone(),
            d: self.d,
            seed,
        }
    }
}

/// Samples the first-level path on the grid; output is `(n+1) * d`
/// node-major and a pure function of (spec, grid).
pub fn sample_signal(spec: &SignalSpec, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let d = spec.d;
    if d == 0 {
        return Err(Error::InvalidSignal("dimension must be >= 1".into()));
    }
    match &spec.kind {
        SignalKind::Bm => {
            let mut rng = rng::seeded_rng(spec.seed);
            let normals = rng::standard_normals(&mut rng, n * d);
            let mut x = vec![0.0; (n + 1) * d];
            for k in 0..n {
                let sdt = (grid.t(k + 1) - grid.t(k)).sqrt();
                for a in 0..d {
                    x[(k + 1) * d + a] = x[k * d + a] + sdt * normals[k * d + a];
                }
            }
            Ok(x)
        }
        SignalKind::Fbm { hurst } => sample_fbm(*hurst, d, spec.seed, grid),
        SignalKind::Sin { freq } => {
            let mut x = Vec::with_capacity((n + 1) * d);
            for i in 0..=n {
                let t = grid.t(i);
                for a in 0..d {
                    x.push((freq * t + a as f64 * std::f64::consts::FRAC_PI_2).sin());
                }
            }
            Ok(x)
        }
        SignalKind::Poly { coeffs } => {
            if coeffs.len() != d {
                return Err(Error::InvalidSignal(format!(
                    "poly needs {} coefficient lists, got {}",
                    d,
                    coeffs.len()
                )));
            }
            let mut x = Vec::with_capacity((n + 1) * d);
            for i in 0..=n {
                let t = grid.t(i);
                for c in coeffs {
                    let mut v = 0.0;
                    for &ck in c.iter().rev() {
                        v = v * t + ck;
                    }
                    x.push(v);
                }
            }
            Ok(x)
        }
        SignalKind::Custom { samples } => {
            if samples.len() != (n + 1) * d {
                return Err(Error::InvalidSignal(format!(
                    "custom samples have {} entries, expected {}",
                    samples.len(),
                    (n + 1) * d
                )));
            }
            Ok(samples.clone())
        }
    }
}

fn sample_fbm(hurst: f64, d: usize, seed: u64, grid: &Grid) -> Result<Vec<f64>> {
    if !(hurst > 1.0 / 3.0 && hurst <= 1.0) {
        return Err(Error::InvalidSignal(format!(
            "fbm Hurst parameter must lie in (1/3, 1], got {hurst}"
        )));
    }
    let n = grid.n_cells();
    if n > FBM_MAX_CELLS {
        return Err(Error::InvalidSignal(format!(
            "fbm grid has {n} cells, dense factorization budget is {FBM_MAX_CELLS}"
        )));
    }
    let mut rng = rng::seeded_rng(seed);
    let normals = rng::standard_normals(&mut rng, n * d);
    if hurst == 1.0 {
        // Degenerate rank-one case: X_t = xi * t per coordinate.
        let mut x = vec![0.0; (n + 1) * d];
        for i in 0..=n {
            for a in 0..d {
                x[i * d + a] = normals[a] * grid.t(i);
            }
        }
        return Ok(x);
    }
    let two_h = 2.0 * hurst;
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let s = grid.t(i + 1);
        let t = grid.t(j + 1);
        0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
    });
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::InvalidSignal("fbm covariance not positive definite".into()))?;
    let l = chol.l();
    let mut x = vec![0.0; (n + 1) * d];
    for a in 0..d {
        for i in 0..n {
            let mut v = 0.0;
            for j in 0..=i {
                v += l[(i, j)] * normals[j * d + a];
            }
            x[(i + 1) * d + a] = v;
        }
    }
    Ok(x)
}

/// Geometric lift of piecewise-linear interpolation: each cell's second
/// level is the exact iterated integral `1/2 dX ⊗ dX` of the interpolant.
pub fn lift_piecewise_linear(
    grid: Grid,
    d: usize,
    samples: Vec<f64>,
    alpha: Alpha,
) -> Result<RoughPath> {
    if samples.len() < 2 * d {
        return Err(Error::InvalidSignal("need at least 2 samples to lift".into()));
    }
    let n = grid.n_cells();
    let mut xx = vec![0.0; n * d * d];
    for k in 0..n {
        let dx = linalg::sub(&samples[(k + 1) * d..(k + 2) * d], &samples[k * d..(k + 1) * d]);
        let cell = &mut xx[k * d * d..(k + 1) * d * d];
        for p in 0..d {
            for q in 0..d {
                cell[p * d + q] = 0.5 * dx[p] * dx[q];
            }
        }
    }
    RoughPath::new(grid, d, samples, xx, alpha, true)
}

/// Itô-style lift: cell area `1/2 (dW ⊗ dW - dt I)`. Non-geometric, so the
/// symmetric-part identity deliberately fails for it.
pub fn lift_ito(grid: Grid, d: usize, samples: Vec<f64>, alpha: Alpha) -> Result<RoughPath> {
    if samples.len() < 2 * d {
        return Err(Error::InvalidSignal("need at least 2 samples to lift".into()));
    }
    let n = grid.n_cells();
    let mut xx = vec![0.0; n * d * d];
    for k in 0..n {
        let dt = grid.t(k + 1) - grid.t(k);
        let dx = linalg::sub(&samples[(k + 1) * d..(k + 2) * d], &samples[k * d..(k + 1) * d]);
        let cell = &mut xx[k * d * d..(k + 1) * d * d];
        for p in 0..d {
            for q in 0..d {
                cell[p * d + q] = 0.5 * dx[p] * dx[q];
                if p == q {
                    cell[p * d + q] -= 0.5 * dt;
                }
            }
        }
    }
    RoughPath::new(grid, d, samples, xx, alpha, false)
}

/// Same signal on every `factor`-th node; coarse cell areas are
/// Chen-accumulated from the fine cells, not re-lifted.
pub fn coarsen(path: &RoughPath, factor: usize) -> Result<RoughPath> {
    let grid = path.grid().subgrid(factor)?;
    let d = path.dim();
    let nc = grid.n_cells();
    let mut x = Vec::with_capacity((nc + 1) * d);
    let mut xx = Vec::with_capacity(nc * d * d);
    for k in 0..=nc {
        x.extend_from_slice(path.x_at(k * factor));
    }
    for k in 0..nc {
        let (_, area) = path.chen_pair(k * factor, (k + 1) * factor)?;
        xx.extend_from_slice(&area);
    }
    RoughPath::new(grid, d, x, xx, path.alpha(), path.is_geometric())
}

/// Wong-Zakai approximant: keeps every `factor`-th first-level value,
/// interpolates linearly back to the fine grid, discards the fine areas and
/// re-lifts. Shares the fine grid, so distances to the original are defined.
pub fn relift_linear(path: &RoughPath, factor: usize) -> Result<RoughPath> {
    let n = path.grid().n_cells();
    if factor == 0 || n % factor != 0 {
        return Err(Error::NonDivisorFactor { factor, n });
    }
    let d = path.dim();
    let mut samples = vec![0.0; (n + 1) * d];
    for k in (0..=n).step_by(factor) {
        samples[k * d..(k + 1) * d].copy_from_slice(path.x_at(k));
    }
    for block in (0..n).step_by(factor) {
        let t0 = path.grid().t(block);
        let t1 = path.grid().t(block + factor);
        for i in block + 1..block + factor {
            let w = (path.grid().t(i) - t0) / (t1 - t0);
            for a in 0..d {
                samples[i * d + a] =
                    (1.0 - w) * path.x_at(block)[a] + w * path.x_at(block + factor)[a];
            }
        }
    }
    lift_piecewise_linear(path.grid().clone(), d, samples, path.alpha())
}
