//! Sampling grids on [0, T].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Dyadic,
}

/// Strictly increasing sampling times `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    times: Vec<f64>,
}

impl Grid {
    /// Builds a grid of `n` cells on `[0, T]`. The dyadic kind additionally
    /// requires `n` to be a power of two.
    pub fn make(horizon: f64, n: usize, kind: GridKind) -> Result<Grid> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("cell count must be >= 1".into()));
        }
        if kind == GridKind::Dyadic && !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "dyadic grid needs a power-of-two cell count, got {n}"
            )));
        }
        let times = (0..=n)
            .map(|k| horizon * (k as f64) / (n as f64))
            .collect();
        Ok(Grid { times })
    }

    /// Wraps explicit times. Must be strictly increasing, start at 0.
    pub fn from_times(times: Vec<f64>) -> Result<Grid> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 time points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "times must start at 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "times not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Grid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// Number of cells (one less than the number of nodes).
    pub fn n_cells(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Cell width if the grid is (numerically) uniform, else `None`.
    /// Uniform grids let the pair scans use precomputed power tables.
    pub fn uniform_gap(&self) -> Option<f64> {
        let n = self.n_cells();
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        for w in self.times.windows(2) {
            let d = w[1] - w[0];
            min = min.min(d);
            max = max.max(d);
        }
        if max / min <= 1.0 + 1e-12 {
            Some(self.horizon() / n as f64)
        } else {
            None
        }
    }

    /// Grid on `[0, t_b - t_a]` made of the nodes `a..=b`, times shifted so
    /// the window starts at zero.
    pub fn window(&self, a: usize, b: usize) -> Result<Grid> {
        self.check_pair(a, b)?;
        if a == b {
            return Err(Error::InvalidGrid("window must contain a cell".into()));
        }
        let t0 = self.times[a];
        Grid::from_times(self.times[a..=b].iter().map(|t| t - t0).collect())
    }

    /// Keeps every `factor`-th node. `factor` must divide the cell count.
    pub fn subgrid(&self, factor: usize) -> Result<Grid> {
        let n = self.n_cells();
        if factor == 0 || n % factor != 0 {
            return Err(Error::NonDivisorFactor { factor, n });
        }
        Grid::from_times((0..=n / factor).map(|k| self.times[k * factor]).collect())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.times.len() {
            Err(Error::IndexOutOfRange {
                index: i,
                nodes: self.times.len(),
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i > j {
            Err(Error::UnorderedIndices { i, j })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_quarters() {
        let g = Grid::make(1.0, 4, GridKind::Uniform).unwrap();
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.horizon(), 1.0);
    }

    #[test]
    fn single_cell() {
        let g = Grid::make(2.0, 1, GridKind::Uniform).unwrap();
        assert_eq!(g.times(), &[0.0, 2.0]);
    }

    #[test]
    fn dyadic_rejects_non_power_of_two() {
        assert!(Grid::make(1.0, 3, GridKind::Dyadic).is_err());
        assert!(Grid::make(1.0, 8, GridKind::Dyadic).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Grid::make(0.0, 4, GridKind::Uniform).is_err());
        assert!(Grid::make(-1.0, 4, GridKind::Uniform).is_err());
        assert!(Grid::make(1.0, 0, GridKind::Uniform).is_err());
    }

    #[test]
    fn window_shifts_to_zero() {
        let g = Grid::make(1.0, 4, GridKind::Uniform).unwrap();
        let w = g.window(1, 3).unwrap();
        assert_eq!(w.times(), &[0.0, 0.25, 0.5]);
    }

    #[test]
    fn subgrid_keeps_every_kth() {
        let g = Grid::make(1.0, 8, GridKind::Uniform).unwrap();
        let s = g.subgrid(4).unwrap();
        assert_eq!(s.times(), &[0.0, 0.5, 1.0]);
        assert!(g.subgrid(3).is_err());
    }

    #[test]
    fn uniform_gap_detection() {
        let g = Grid::make(1.0, 4, GridKind::Uniform).unwrap();
        assert!(g.uniform_gap().is_some());
        let g2 = Grid::from_times(vec![0.0, 0.1, 0.5, 1.0]).unwrap();
        assert!(g2.uniform_gap().is_none());
    }
}
