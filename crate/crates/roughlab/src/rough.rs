//! Level-2 rough paths on a grid: first-level values, per-cell second-level
//! increments, Chen reconstruction for arbitrary pairs, and Hölder norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg;
use crate::par;
use crate::scan::PairWeights;

/// Hölder exponent restricted to the level-2 regime (1/3, 1/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const DEFAULT: f64 = 0.45;

    pub fn new(a: f64) -> Result<Alpha> {
        if a > 1.0 / 3.0 && a <= 0.5 {
            Ok(Alpha(a))
        } else {
            Err(Error::InvalidAlpha(a))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(a: f64) -> Result<Alpha> {
        Alpha::new(a)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Hölder norms of a rough path and, when produced from a controlled path,
/// of its remainders. `seminorm = r0_2alpha + r1_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub x_alpha: f64,
    pub xx_2alpha: f64,
    pub r0_2alpha: f64,
    pub r1_alpha: f64,
    pub seminorm: f64,
    pub pairs_scanned: usize,
}

/// First level `X(t_i)` plus per-cell second level. Second-level data over
/// arbitrary pairs is rebuilt by Chen chaining, so Chen's relation holds by
/// construction; the per-cell values are the only free data.
#[derive(Debug, Clone)]
pub struct RoughPath {
    grid: Grid,
    d: usize,
    /// `(n+1) * d`, node-major.
    x: Vec<f64>,
    /// `n * d * d`; cell k holds the matrix with `[i][j] = ∫ X^i dX^j` over
    /// the cell.
    xx_cell: Vec<f64>,
    alpha: Alpha,
    geometric: bool,
}

impl RoughPath {
    pub fn new(
        grid: Grid,
        d: usize,
        x: Vec<f64>,
        xx_cell: Vec<f64>,
        alpha: Alpha,
        geometric: bool,
    ) -> Result<RoughPath> {
        let n = grid.n_cells();
        if d == 0 {
            return Err(Error::ShapeMismatch("driver dimension must be >= 1".into()));
        }
        if x.len() != (n + 1) * d {
            return Err(Error::ShapeMismatch(format!(
                "x has {} entries, expected {}",
                x.len(),
                (n + 1) * d
            )));
        }
        if xx_cell.len() != n * d * d {
            return Err(Error::ShapeMismatch(format!(
                "xx_cell has {} entries, expected {}",
                xx_cell.len(),
                n * d * d
            )));
        }
        if x.iter().chain(&xx_cell).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rough path data".into()));
        }
        Ok(RoughPath {
            grid,
            d,
            x,
            xx_cell,
            alpha,
            geometric,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Whether the second level came from a geometric lift (symmetric part
    /// equals half the squared increment).
    pub fn is_geometric(&self) -> bool {
        self.geometric
    }

    #[inline]
    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn cell(&self, k: usize) -> &[f64] {
        let dd = self.d * self.d;
        &self.xx_cell[k * dd..(k + 1) * dd]
    }

    /// `X_{t_i, t_j}` as a fresh vector.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        linalg::sub(self.x_at(j), self.x_at(i))
    }

    /// Reconstructs `(X_{t_i,t_j}, 𝕏_{t_i,t_j})` by accumulating cells
    /// left-to-right through Chen's relation. `i == j` gives zeros.
    pub fn chen_pair(&self, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.grid.check_pair(i, j)?;
        let d = self.d;
        let mut inc = vec![0.0; d];
        let mut area = vec![0.0; d * d];
        for k in i..j {
            let dx = self.increment(k, k + 1);
            // Chen: extend [i,k] by the cell [k,k+1].
            for (a, &c) in area.iter_mut().zip(self.cell(k)) {
                *a += c;
            }
            linalg::outer_add(&mut area, &inc, &dx);
            for (p, &v) in inc.iter_mut().zip(&dx) {
                *p += v;
            }
        }
        Ok((inc, area))
    }

    /// Exact max of `|X_{s,t}|/(t-s)^alpha` and `|𝕏_{s,t}|/(t-s)^{2 alpha}`
    /// over all grid pairs.
    pub fn holder_norms(&self) -> Result<HolderReport> {
        let n = self.grid.n_cells();
        if n < 1 {
            return Err(Error::InvalidGrid("degenerate grid".into()));
        }
        let weights = PairWeights::new(&self.grid, self.alpha.value());
        let per_start = par::map_indexed(n, |i| self.sweep_norms(i, &weights));
        let (x_alpha, xx_2alpha) = per_start
            .into_iter()
            .fold((0.0f64, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)));
        Ok(HolderReport {
            x_alpha,
            xx_2alpha,
            r0_2alpha: 0.0,
            r1_alpha: 0.0,
            seminorm: 0.0,
            pairs_scanned: n * (n + 1) / 2,
        })
    }

    fn sweep_norms(&self, i: usize, weights: &PairWeights) -> (f64, f64) {
        let d = self.d;
        let n = self.grid.n_cells();
        let ti = self.grid.t(i);
        let mut inc = vec![0.0; d];
        let mut area = vec![0.0; d * d];
        let mut dx = vec![0.0; d];
        let mut max_x = 0.0f64;
        let mut max_xx = 0.0f64;
        for j in i + 1..=n {
            for ((v, &xj), &xp) in dx.iter_mut().zip(self.x_at(j)).zip(self.x_at(j - 1)) {
                *v = xj - xp;
            }
            for (a, &c) in area.iter_mut().zip(self.cell(j - 1)) {
                *a += c;
            }
            linalg::outer_add(&mut area, &inc, &dx);
            for (p, &v) in inc.iter_mut().zip(&dx) {
                *p += v;
            }
            let dt = self.grid.t(j) - ti;
            let span = j - i;
            max_x = max_x.max(linalg::norm(&inc) * weights.wa(span, dt));
            max_xx = max_xx.max(linalg::norm(&area) * weights.w2a(span, dt));
        }
        (max_x, max_xx)
    }

    /// `‖X - X̃‖_alpha + ‖𝕏 - 𝕏̃‖_{2 alpha}` over all grid pairs.
    pub fn rough_distance(&self, other: &RoughPath) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("rough_distance needs equal grids".into()));
        }
        if self.d != other.d {
            return Err(Error::ShapeMismatch(format!(
                "dimension {} vs {}",
                self.d, other.d
            )));
        }
        let n = self.grid.n_cells();
        let weights = PairWeights::new(&self.grid, self.alpha.value());
        let per_start = par::map_indexed(n, |i| {
            let d = self.d;
            let ti = self.grid.t(i);
            let mut inc_a = vec![0.0; d];
            let mut inc_b = vec![0.0; d];
            let mut area_a = vec![0.0; d * d];
            let mut area_b = vec![0.0; d * d];
            let mut dxa = vec![0.0; d];
            let mut dxb = vec![0.0; d];
            let mut max_x = 0.0f64;
            let mut max_xx = 0.0f64;
            for j in i + 1..=n {
                for ((v, &xj), &xp) in dxa.iter_mut().zip(self.x_at(j)).zip(self.x_at(j - 1)) {
                    *v = xj - xp;
                }
                for ((v, &xj), &xp) in dxb.iter_mut().zip(other.x_at(j)).zip(other.x_at(j - 1)) {
                    *v = xj - xp;
                }
                for (a, &c) in area_a.iter_mut().zip(self.cell(j - 1)) {
                    *a += c;
                }
                for (b, &c) in area_b.iter_mut().zip(other.cell(j - 1)) {
                    *b += c;
                }
                linalg::outer_add(&mut area_a, &inc_a, &dxa);
                linalg::outer_add(&mut area_b, &inc_b, &dxb);
                for (p, &v) in inc_a.iter_mut().zip(&dxa) {
                    *p += v;
                }
                for (p, &v) in inc_b.iter_mut().zip(&dxb) {
                    *p += v;
                }
                let dt = self.grid.t(j) - ti;
                let span = j - i;
                max_x = max_x.max(linalg::dist(&inc_a, &inc_b) * weights.wa(span, dt));
                max_xx = max_xx.max(linalg::dist(&area_a, &area_b) * weights.w2a(span, dt));
            }
            (max_x, max_xx)
        });
        let (dx, dxx) = per_start
            .into_iter()
            .fold((0.0f64, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)));
        Ok(dx + dxx)
    }

    /// Rough-path norm `‖X‖_alpha + ‖𝕏‖_{2 alpha}`.
    pub fn rough_norm(&self) -> Result<f64> {
        let r = self.holder_norms()?;
        Ok(r.x_alpha + r.xx_2alpha)
    }

    /// The same signal restricted to nodes `a..=b`, with times shifted so the
    /// window starts at zero.
    pub fn restrict(&self, a: usize, b: usize) -> Result<RoughPath> {
        let grid = self.grid.window(a, b)?;
        let d = self.d;
        let dd = d * d;
        let x = self.x[a * d..(b + 1) * d].to_vec();
        let xx_cell = self.xx_cell[a * dd..b * dd].to_vec();
        RoughPath::new(grid, d, x, xx_cell, self.alpha, self.geometric)
    }
}
