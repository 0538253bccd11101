//! Uniform cell-centered mesh on the unit interval.

use crate::error::{Error, Result};

/// A per-cell scalar field. Length always matches `Grid::n_cells`.
pub type Field = Vec<f64>;

/// Uniform 1-D mesh on [0, 1] with cell-centered unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_cells: usize,
    spacing: f64,
    centers: Vec<f64>,
}

impl Grid {
    /// Build a mesh with `n_cells` cells of width `1/n_cells`; cell `i` is
    /// centered at `(i + 1/2) / n_cells`. Fewer than 3 cells cannot carry
    /// the boundary closures and are rejected.
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 3 {
            return Err(Error::GridTooCoarse {
                min: 3,
                got: n_cells,
            });
        }
        let spacing = 1.0 / n_cells as f64;
        let centers = (0..n_cells)
            .map(|i| (i as f64 + 0.5) * spacing)
            .collect();
        Ok(Self {
            n_cells,
            spacing,
            centers,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Constant field on this grid.
    pub fn constant(&self, value: f64) -> Field {
        vec![value; self.n_cells]
    }

    /// Field sampled from a function of the cell center.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        self.centers.iter().map(|&x| f(x)).collect()
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_cells {
            return Err(Error::LengthMismatch {
                expected: self.n_cells,
                got: v.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cells() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.centers(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn three_cells_is_the_boundary_of_validity() {
        let g = Grid::new(3).unwrap();
        assert!((g.spacing() - 1.0 / 3.0).abs() < 1e-16);
        assert!((g.spacing() * 3.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_cells_rejected() {
        assert!(matches!(
            Grid::new(2),
            Err(Error::GridTooCoarse { min: 3, got: 2 })
        ));
    }

    #[test]
    fn centers_increasing_inside_unit_interval() {
        let g = Grid::new(17).unwrap();
        for w in g.centers().windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(g.centers()[0] > 0.0 && *g.centers().last().unwrap() < 1.0);
    }
}
