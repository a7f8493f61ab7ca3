//! Time and space discretization grids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform time grid `t_k = k * t_max / n_steps`, `k = 0..=n_steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!("t_max must be positive, got {t_max}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t_max, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.t_max / self.n_steps as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.point(k)).collect()
    }

    /// Index of a grid point equal to `t` (within a small relative snap).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.n_steps as f64 {
            return Err(Error::TimeNotOnGrid(t));
        }
        let k = k as usize;
        if (self.point(k) - t).abs() > 1e-9 * self.t_max.max(1.0) {
            return Err(Error::TimeNotOnGrid(t));
        }
        Ok(k)
    }
}

/// Symmetric spatial grid on `[-X, X]` with `2 * n_half` cells of width `dx`.
///
/// Zero sits on a cell boundary, so intervals `[0, a]` with grid-aligned `a`
/// are exact unions of cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub half_width: f64,
    pub dx: f64,
    n_half: usize,
}

impl SpatialGrid {
    /// Build a grid covering at least `[-half_width, half_width]`; the
    /// half-width is snapped up to a whole number of cells.
    pub fn new(half_width: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        let n_half = (half_width / dx - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { half_width: n_half as f64 * dx, dx, n_half })
    }

    pub fn n_cells(&self) -> usize {
        2 * self.n_half
    }

    /// Left boundary of cell `j`; exact 0.0 at `j = n_half`.
    pub fn cell_left(&self, j: usize) -> f64 {
        (j as f64 - self.n_half as f64) * self.dx
    }

    pub fn cell_right(&self, j: usize) -> f64 {
        self.cell_left(j + 1)
    }

    /// Midpoint of cell `j`.
    pub fn cell_mid(&self, j: usize) -> f64 {
        (j as f64 - self.n_half as f64 + 0.5) * self.dx
    }

    /// Cell containing `v`, clamped to the grid range.
    pub fn cell_of(&self, v: f64) -> usize {
        let j = (v / self.dx + self.n_half as f64).floor();
        (j.max(0.0) as usize).min(self.n_cells() - 1)
    }

    pub fn contains(&self, v: f64) -> bool {
        -self.half_width <= v && v <= self.half_width
    }

    /// Fraction of cell `j` covered by the (unordered) interval between
    /// `a` and `b`. Lies in `[0, 1]`; degenerate intervals cover nothing.
    pub fn coverage(&self, a: f64, b: f64, j: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let l = self.cell_left(j);
        let r = self.cell_right(j);
        let overlap = hi.min(r) - lo.max(l);
        if overlap <= 0.0 {
            0.0
        } else {
            (overlap / self.dx).min(1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn time_grid_points_start_at_zero_and_increase() {
        let g = TimeGrid::new(10.0, 1000).unwrap();
        let pts = g.points();
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts.len(), 1001);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.index_of(0.05).unwrap(), 5);
        assert!(g.index_of(0.0512).is_err());
    }

    #[test]
    fn spatial_grid_is_symmetric_with_zero_boundary() {
        let g = SpatialGrid::new(5.0, 0.01).unwrap();
        assert_eq!(g.n_cells(), 1000);
        assert_eq!(g.cell_left(500), 0.0);
        assert_eq!(g.cell_left(0), -5.0);
        assert_eq!(g.cell_right(999), 5.0);
    }

    #[test]
    fn coverage_examples() {
        let g = SpatialGrid::new(5.0, 0.2).unwrap();
        // cell [2.4, 2.6) is index 37 relative to -5.0
        let j = g.cell_of(2.5);
        assert!((g.cell_left(j) - 2.4).abs() < 1e-12);
        assert!((g.coverage(0.0, 2.5, j) - 0.5).abs() < 1e-12);
        // empty interval covers nothing
        assert_eq!(g.coverage(0.0, 0.0, j), 0.0);
        // reversed endpoints behave the same
        assert_eq!(g.coverage(2.5, 0.0, j), g.coverage(0.0, 2.5, j));
    }

    proptest! {
        #[test]
        fn coverage_is_a_fraction(a in -6.0..6.0f64, b in -6.0..6.0f64, j in 0usize..50) {
            let g = SpatialGrid::new(5.0, 0.2).unwrap();
            let c = g.coverage(a, b, j);
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn coverage_sums_to_interval_length(a in -4.0..4.0f64, b in -4.0..4.0f64) {
            let g = SpatialGrid::new(5.0, 0.1).unwrap();
            let total: f64 = (0..g.n_cells()).map(|j| g.coverage(a, b, j) * g.dx).sum();
            prop_assert!((total - (a - b).abs()).abs() < 1e-9);
        }
    }
}
