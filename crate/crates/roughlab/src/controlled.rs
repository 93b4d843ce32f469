//! Controlled rough paths: values plus a Gubinelli derivative relative to a
//! shared base rough path, with remainder norms and distances.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::par;
use crate::rough::{HolderReport, RoughPath};
use crate::scan::PairWeights;

/// `(Y, Y')` on the base grid. Values are `rows x cols` tensors (`cols = 1`
/// for plain vector paths, `cols = w` for paths valued in L(R^w, R^rows));
/// derivatives carry an extra driver index of length `d`.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    base: Arc<RoughPath>,
    rows: usize,
    cols: usize,
    /// `(n+1) * rows * cols`
    y: Vec<f64>,
    /// `(n+1) * rows * cols * d`
    yprime: Vec<f64>,
}

impl ControlledPath {
    pub fn new(
        base: Arc<RoughPath>,
        rows: usize,
        cols: usize,
        y: Vec<f64>,
        yprime: Vec<f64>,
    ) -> Result<ControlledPath> {
        let nodes = base.grid().n_nodes();
        let d = base.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch("value shape must be nonzero".into()));
        }
        if y.len() != nodes * rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "values have {} entries, expected {}",
                y.len(),
                nodes * rows * cols
            )));
        }
        if yprime.len() != nodes * rows * cols * d {
            return Err(Error::ShapeMismatch(format!(
                "derivatives have {} entries, expected {}",
                yprime.len(),
                nodes * rows * cols * d
            )));
        }
        if y.iter().chain(&yprime).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("controlled path data".into()));
        }
        Ok(ControlledPath {
            base,
            rows,
            cols,
            y,
            yprime,
        })
    }

    /// The canonical driver-as-controlled-path `(X, id)`.
    pub fn identity_over(base: Arc<RoughPath>) -> ControlledPath {
        let d = base.dim();
        let nodes = base.grid().n_nodes();
        let mut y = Vec::with_capacity(nodes * d);
        for i in 0..nodes {
            y.extend_from_slice(base.x_at(i));
        }
        let mut yprime = vec![0.0; nodes * d * d];
        for i in 0..nodes {
            for a in 0..d {
                yprime[(i * d + a) * d + a] = 1.0;
            }
        }
        ControlledPath {
            base,
            rows: d,
            cols: 1,
            y,
            yprime,
        }
    }

    /// Constant value, zero derivative.
    pub fn constant(base: Arc<RoughPath>, rows: usize, cols: usize, value: &[f64]) -> Result<ControlledPath> {
        if value.len() != rows * cols {
            return Err(Error::ShapeMismatch("constant value shape".into()));
        }
        let nodes = base.grid().n_nodes();
        let d = base.dim();
        let mut y = Vec::with_capacity(nodes * rows * cols);
        for _ in 0..nodes {
            y.extend_from_slice(value);
        }
        let yprime = vec![0.0; nodes * rows * cols * d];
        ControlledPath::new(base, rows, cols, y, yprime)
    }

    pub fn base(&self) -> &Arc<RoughPath> {
        &self.base
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn value_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn y_at(&self, i: usize) -> &[f64] {
        let m = self.rows * self.cols;
        &self.y[i * m..(i + 1) * m]
    }

    #[inline]
    pub fn yp_at(&self, i: usize) -> &[f64] {
        let m = self.rows * self.cols * self.base.dim();
        &self.yprime[i * m..(i + 1) * m]
    }

    pub fn same_base(&self, other: &ControlledPath) -> bool {
        Arc::ptr_eq(&self.base, &other.base)
    }

    fn same_shape(&self, other: &ControlledPath) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// `R^0_{s,t} = Y_t - Y_s - Y'_s X_{s,t}` and `R^1_{s,t} = Y'_t - Y'_s`.
    pub fn remainders(&self, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.base.grid().check_pair(i, j)?;
        let d = self.base.dim();
        let m = self.rows * self.cols;
        let xinc = self.base.increment(i, j);
        let yi = self.y_at(i);
        let yj = self.y_at(j);
        let ypi = self.yp_at(i);
        let ypj = self.yp_at(j);
        let mut r0 = Vec::with_capacity(m);
        for ab in 0..m {
            let mut v = yj[ab] - yi[ab];
            for (k, &xk) in xinc.iter().enumerate() {
                v -= ypi[ab * d + k] * xk;
            }
            r0.push(v);
        }
        let r1 = linalg::sub(ypj, ypi);
        Ok((r0, r1))
    }

    /// Squared remainder norms against `(xi, yi, ypi)` frozen at the start
    /// node, written allocation-free for the O(n^2) scans.
    #[inline]
    fn remainder_sq(&self, xi: &[f64], yi: &[f64], ypi: &[f64], j: usize) -> (f64, f64) {
        let d = self.base.dim();
        let m = self.rows * self.cols;
        let xj = self.base.x_at(j);
        let yj = self.y_at(j);
        let ypj = self.yp_at(j);
        let mut s0 = 0.0;
        for ab in 0..m {
            let mut v = yj[ab] - yi[ab];
            for k in 0..d {
                v -= ypi[ab * d + k] * (xj[k] - xi[k]);
            }
            s0 += v * v;
        }
        let mut s1 = 0.0;
        for (a, b) in ypj.iter().zip(ypi) {
            let g = a - b;
            s1 += g * g;
        }
        (s0, s1)
    }

    /// `(‖R^0‖_{2 alpha}, ‖R^1‖_alpha)` over all grid pairs.
    pub fn remainder_norms(&self) -> (f64, f64) {
        let n = self.base.grid().n_cells();
        let weights = PairWeights::new(self.base.grid(), self.base.alpha().value());
        let per_start = par::map_indexed(n, |i| {
            let mut max0 = 0.0f64;
            let mut max1 = 0.0f64;
            let ti = self.base.grid().t(i);
            let xi = self.base.x_at(i);
            let yi = self.y_at(i);
            let ypi = self.yp_at(i);
            for j in i + 1..=n {
                let (s0, s1) = self.remainder_sq(xi, yi, ypi, j);
                let dt = self.base.grid().t(j) - ti;
                let span = j - i;
                max0 = max0.max(s0.sqrt() * weights.w2a(span, dt));
                max1 = max1.max(s1.sqrt() * weights.wa(span, dt));
            }
            (max0, max1)
        });
        per_start
            .into_iter()
            .fold((0.0f64, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)))
    }

    /// Seminorm `‖Y‖_{X;alpha} = ‖R^0‖_{2 alpha} + ‖R^1‖_alpha`.
    pub fn seminorm(&self) -> f64 {
        let (r0, r1) = self.remainder_norms();
        r0 + r1
    }

    /// Remainder norms together with the base path's Hölder norms.
    pub fn holder_report(&self) -> Result<HolderReport> {
        let base = self.base.holder_norms()?;
        let (r0, r1) = self.remainder_norms();
        let n = self.base.grid().n_cells();
        Ok(HolderReport {
            x_alpha: base.x_alpha,
            xx_2alpha: base.xx_2alpha,
            r0_2alpha: r0,
            r1_alpha: r1,
            seminorm: r0 + r1,
            pairs_scanned: n * (n + 1) / 2,
        })
    }

    /// `‖R^{0,Y} - R^{0,Ỹ}‖_{2 alpha} + ‖R^{1,Y} - R^{1,Ỹ}‖_alpha`; each
    /// remainder is taken against its own base, so the bases may differ as
    /// long as the grids and shapes agree.
    pub fn distance(&self, other: &ControlledPath) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.base.grid() != other.base.grid() {
            return Err(Error::GridMismatch("distance needs identical grids".into()));
        }
        let n = self.base.grid().n_cells();
        let weights = PairWeights::new(self.base.grid(), self.base.alpha().value());
        let d = self.base.dim();
        let m = self.rows * self.cols;
        let per_start = par::map_indexed(n, |i| {
            let mut max0 = 0.0f64;
            let mut max1 = 0.0f64;
            let ti = self.base.grid().t(i);
            let (xa_i, ya_i, ypa_i) = (self.base.x_at(i), self.y_at(i), self.yp_at(i));
            let (xb_i, yb_i, ypb_i) = (other.base.x_at(i), other.y_at(i), other.yp_at(i));
            for j in i + 1..=n {
                let (xa_j, ya_j, ypa_j) = (self.base.x_at(j), self.y_at(j), self.yp_at(j));
                let (xb_j, yb_j, ypb_j) = (other.base.x_at(j), other.y_at(j), other.yp_at(j));
                let mut s0 = 0.0;
                for ab in 0..m {
                    let mut va = ya_j[ab] - ya_i[ab];
                    let mut vb = yb_j[ab] - yb_i[ab];
                    for k in 0..d {
                        va -= ypa_i[ab * d + k] * (xa_j[k] - xa_i[k]);
                        vb -= ypb_i[ab * d + k] * (xb_j[k] - xb_i[k]);
                    }
                    let g = va - vb;
                    s0 += g * g;
                }
                let mut s1 = 0.0;
                for ab in 0..m * d {
                    let g = (ypa_j[ab] - ypa_i[ab]) - (ypb_j[ab] - ypb_i[ab]);
                    s1 += g * g;
                }
                let dt = self.base.grid().t(j) - ti;
                let span = j - i;
                max0 = max0.max(s0.sqrt() * weights.w2a(span, dt));
                max1 = max1.max(s1.sqrt() * weights.wa(span, dt));
            }
            (max0, max1)
        });
        let (d0, d1) = per_start
            .into_iter()
            .fold((0.0f64, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)));
        Ok(d0 + d1)
    }

    /// Max over nodes of the Euclidean gap between values.
    pub fn value_sup_distance(&self, other: &ControlledPath) -> Result<f64> {
        if !self.same_shape(other) || self.base.grid() != other.base.grid() {
            return Err(Error::ShapeMismatch("value_sup_distance shapes".into()));
        }
        let nodes = self.base.grid().n_nodes();
        Ok((0..nodes)
            .map(|i| linalg::dist(self.y_at(i), other.y_at(i)))
            .fold(0.0, f64::max))
    }

    /// `a * P + b * Q` on a shared base.
    pub fn linear_combination(
        a: f64,
        p: &ControlledPath,
        b: f64,
        q: &ControlledPath,
    ) -> Result<ControlledPath> {
        if !p.same_base(q) {
            return Err(Error::BaseMismatch);
        }
        if !p.same_shape(q) {
            return Err(Error::ShapeMismatch("linear_combination shapes".into()));
        }
        let y = p
            .y
            .iter()
            .zip(&q.y)
            .map(|(x, z)| a * x + b * z)
            .collect();
        let yprime = p
            .yprime
            .iter()
            .zip(&q.yprime)
            .map(|(x, z)| a * x + b * z)
            .collect();
        ControlledPath::new(p.base.clone(), p.rows, p.cols, y, yprime)
    }

    /// Restriction to nodes `a..=b` over an already-restricted base (so that
    /// several paths can share one window base).
    pub fn restrict(&self, a: usize, b: usize, base: &Arc<RoughPath>) -> Result<ControlledPath> {
        self.base.grid().check_pair(a, b)?;
        if base.grid().n_cells() != b - a || base.dim() != self.base.dim() {
            return Err(Error::GridMismatch(
                "window base does not match requested node range".into(),
            ));
        }
        let m = self.rows * self.cols;
        let md = m * self.base.dim();
        ControlledPath::new(
            base.clone(),
            self.rows,
            self.cols,
            self.y[a * m..(b + 1) * m].to_vec(),
            self.yprime[a * md..(b + 1) * md].to_vec(),
        )
    }

    /// Shifts every value by a constant tensor (derivatives unchanged).
    pub fn shift_values(&self, offset: &[f64]) -> Result<ControlledPath> {
        let m = self.rows * self.cols;
        if offset.len() != m {
            return Err(Error::ShapeMismatch("offset shape".into()));
        }
        let nodes = self.base.grid().n_nodes();
        let mut y = self.y.clone();
        for i in 0..nodes {
            for ab in 0..m {
                y[i * m + ab] += offset[ab];
            }
        }
        ControlledPath::new(self.base.clone(), self.rows, self.cols, y, self.yprime.clone())
    }
}
