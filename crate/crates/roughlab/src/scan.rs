//! Pair-weight tables for the two-parameter Hölder scans.
//!
//! A scan visits every grid pair `s = t_i < t_j = t` and divides an increment
//! norm by `(t - s)^alpha` or `(t - s)^{2 alpha}`. On uniform grids the
//! divisor only depends on the span `j - i`, so both power tables are built
//! once per scan instead of calling `powf` per pair.

use crate::grid::Grid;

pub(crate) struct PairWeights {
    table: Option<(Vec<f64>, Vec<f64>)>,
    alpha: f64,
}

impl PairWeights {
    pub fn new(grid: &Grid, alpha: f64) -> Self {
        let table = grid.uniform_gap().map(|h| {
            let n = grid.n_cells();
            let mut wa = Vec::with_capacity(n + 1);
            let mut w2a = Vec::with_capacity(n + 1);
            wa.push(0.0); // span 0 never used
            w2a.push(0.0);
            for k in 1..=n {
                let dt = h * k as f64;
                wa.push(dt.powf(-alpha));
                w2a.push(dt.powf(-2.0 * alpha));
            }
            (wa, w2a)
        });
        PairWeights { table, alpha }
    }

    /// `(t_j - t_i)^{-alpha}`
    #[inline]
    pub fn wa(&self, span: usize, dt: f64) -> f64 {
        match &self.table {
            Some((wa, _)) => wa[span],
            None => dt.powf(-self.alpha),
        }
    }

    /// `(t_j - t_i)^{-2 alpha}`
    #[inline]
    pub fn w2a(&self, span: usize, dt: f64) -> f64 {
        match &self.table {
            Some((_, w2a)) => w2a[span],
            None => dt.powf(-2.0 * self.alpha),
        }
    }
}
