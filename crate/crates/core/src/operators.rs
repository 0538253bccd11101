//! Discrete 1-D transport operators on a cell-centered mesh.
//!
//! Two operator kinds are assembled, both in conservative flux form:
//!
//! * pure diffusion `D ∂²/∂x²` with zero-flux (reflecting) closures at both
//!   boundary faces, so constants are annihilated exactly;
//! * convection-diffusion `D ∂²/∂x² − U ∂/∂x` written as `∂(D ∂v/∂x − U v)/∂x`
//!   with first-order upwinding of the convective flux, a zero-total-flux
//!   face at `x = 0` and a zero-gradient face at `x = 1` that leaves the
//!   convective outflow `−U v` in place.
//!
//! Upwinding sacrifices an order of accuracy but keeps every off-diagonal
//! entry nonnegative, which the positivity and Perron arguments downstream
//! require.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    NeumannDiffusion,
    RobinConvectionDiffusion,
}

/// Tridiagonal matrix acting on per-cell fields, boundary conditions baked
/// into the first and last rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    kind: OperatorKind,
}

/// Second-difference stencil `D (v[i-1] - 2 v[i] + v[i+1]) / h²` with
/// reflecting ghost cells at both ends. Row sums are exactly zero.
pub fn assemble_diffusion_neumann(grid: &Grid, diffusivity: f64) -> Result<TridiagonalOperator> {
    if !diffusivity.is_finite() || diffusivity <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "diffusivity",
            value: diffusivity,
        });
    }
    let n = grid.n_cells();
    let h = grid.spacing();
    let a = diffusivity / (h * h);

    let lower = vec![a; n - 1];
    let upper = vec![a; n - 1];
    let mut diag = vec![-2.0 * a; n];
    // Boundary faces carry no flux: the ghost value mirrors the cell value.
    diag[0] = -a;
    diag[n - 1] = -a;

    Ok(TridiagonalOperator {
        lower,
        diag,
        upper,
        kind: OperatorKind::NeumannDiffusion,
    })
}

/// Flux-form discretization of `D ∂²v/∂x² − U ∂v/∂x`. The face flux is
/// `D (v[i+1] - v[i])/h − U v[i]` (upwind for `U ≥ 0`); the face at `x = 0`
/// enforces zero total flux and the face at `x = 1` carries only the
/// convective outflow `−U v`.
pub fn assemble_convection_diffusion_robin(
    grid: &Grid,
    diffusivity: f64,
    convection: f64,
) -> Result<TridiagonalOperator> {
    if !diffusivity.is_finite() || diffusivity <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "diffusivity",
            value: diffusivity,
        });
    }
    if !convection.is_finite() || convection < 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "convection",
            value: convection,
        });
    }
    let n = grid.n_cells();
    let h = grid.spacing();
    let a = diffusivity / (h * h);
    let c = convection / h;

    let mut lower = vec![a + c; n - 1];
    let mut diag = vec![-(2.0 * a + c); n];
    let mut upper = vec![a; n - 1];

    // x = 0: total flux through the boundary face is zero.
    diag[0] = -(a + c);
    upper[0] = a;
    // x = 1: zero gradient kills the diffusive flux; −U v leaves the domain.
    lower[n - 2] = a + c;
    diag[n - 1] = -(a + c);

    Ok(TridiagonalOperator {
        lower,
        diag,
        upper,
        kind: OperatorKind::RobinConvectionDiffusion,
    })
}

impl TridiagonalOperator {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Row sums, in the summation order that keeps the Neumann kernel exact.
    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = if i > 0 { self.lower[i - 1] } else { 0.0 };
                s += self.diag[i];
                if i + 1 < n {
                    s += self.upper[i];
                }
                s
            })
            .collect()
    }

    /// Smallest off-diagonal entry; nonnegative for both assembled kinds.
    pub fn min_off_diagonal(&self) -> f64 {
        self.lower
            .iter()
            .chain(self.upper.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Gershgorin upper bound on the spectral bound (largest real part).
    /// Off-diagonals are nonnegative, so this is the max row sum.
    pub fn spectral_bound_estimate(&self) -> f64 {
        self.row_sums().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Tridiagonal matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Result<Field> {
        let n = self.n();
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.lower[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * v[i + 1];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Solve `(shift·I − A) w = rhs` by tridiagonal elimination.
    ///
    /// The shifted matrix must be strictly diagonally dominant (true for any
    /// `shift > 0` against either assembled kind, whose spectral bounds are
    /// ≤ 0); otherwise the solve refuses rather than returning garbage.
    /// For nonnegative `rhs` the solution is nonnegative: the shifted matrix
    /// is an M-matrix and the elimination never subtracts same-signed terms.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Field> {
        let n = self.n();
        if rhs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        for i in 0..n {
            let d = shift - self.diag[i];
            let off = if i > 0 { self.lower[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            let margin = d.abs() - off;
            if margin.is_nan() || margin <= 0.0 {
                return Err(Error::NotDiagonallyDominant { row: i, margin });
            }
        }

        // Thomas elimination on (shift·I − A): sub-diagonal −lower,
        // main diagonal shift − diag, super-diagonal −upper.
        let mut c_prime = vec![0.0; n - 1];
        let mut d_prime = vec![0.0; n];
        let b0 = shift - self.diag[0];
        if b0 == 0.0 {
            return Err(Error::ZeroPivot(0));
        }
        c_prime[0] = -self.upper[0] / b0;
        d_prime[0] = rhs[0] / b0;
        for i in 1..n {
            let sub = -self.lower[i - 1];
            let den = (shift - self.diag[i]) - sub * c_prime[i - 1];
            if den == 0.0 {
                return Err(Error::ZeroPivot(i));
            }
            if i + 1 < n {
                c_prime[i] = -self.upper[i] / den;
            }
            d_prime[i] = (rhs[i] - sub * d_prime[i - 1]) / den;
        }
        let mut w = vec![0.0; n];
        w[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = d_prime[i] - c_prime[i] * w[i + 1];
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn neumann_rejects_bad_diffusivity() {
        assert!(assemble_diffusion_neumann(&grid(4), 0.0).is_err());
        assert!(assemble_diffusion_neumann(&grid(4), -1.0).is_err());
    }

    #[test]
    fn robin_rejects_negative_convection() {
        assert!(assemble_convection_diffusion_robin(&grid(4), 1.0, -0.5).is_err());
        assert!(assemble_convection_diffusion_robin(&grid(4), 0.0, 1.0).is_err());
    }

    #[test]
    fn neumann_n4_rows() {
        // h = 1/4 so D/h² = 16.
        let op = assemble_diffusion_neumann(&grid(4), 1.0).unwrap();
        assert_eq!(op.kind(), OperatorKind::NeumannDiffusion);
        assert_eq!(op.lower(), &[16.0, 16.0, 16.0]);
        assert_eq!(op.upper(), &[16.0, 16.0, 16.0]);
        assert_eq!(op.diag(), &[-16.0, -32.0, -32.0, -16.0]);
    }

    #[test]
    fn neumann_row_sums_exactly_zero() {
        for n in [3, 4, 7, 64, 129] {
            let op = assemble_diffusion_neumann(&grid(n), 0.37).unwrap();
            for (i, s) in op.row_sums().into_iter().enumerate() {
                assert_eq!(s, 0.0, "row {i} of n={n}");
            }
        }
    }

    #[test]
    fn neumann_annihilates_constants() {
        let op = assemble_diffusion_neumann(&grid(11), 2.5).unwrap();
        let out = op.apply(&[3.7; 11]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn robin_n4_rows() {
        // h = 1/4: D/h² = 16, U/h = 4.
        let op = assemble_convection_diffusion_robin(&grid(4), 1.0, 1.0).unwrap();
        assert_eq!(op.kind(), OperatorKind::RobinConvectionDiffusion);
        assert_eq!(op.lower(), &[20.0, 20.0, 20.0]);
        assert_eq!(op.upper(), &[16.0, 16.0, 16.0]);
        assert_eq!(op.diag(), &[-20.0, -36.0, -36.0, -20.0]);
    }

    #[test]
    fn robin_reduces_to_neumann_at_zero_convection() {
        for n in [3, 5, 32] {
            let g = grid(n);
            let robin = assemble_convection_diffusion_robin(&g, 0.8, 0.0).unwrap();
            let neumann = assemble_diffusion_neumann(&g, 0.8).unwrap();
            assert_eq!(robin.lower(), neumann.lower());
            assert_eq!(robin.diag(), neumann.diag());
            assert_eq!(robin.upper(), neumann.upper());
        }
    }

    #[test]
    fn robin_constant_field_drains_through_the_first_cell() {
        // Summing the n=4 flux-form stencil by hand on a constant field c:
        // the x=0 face carries no flux while the first interior face carries
        // −U c, so row 0 gives −U c / h; every other row balances (its
        // outflow, including the boundary outflow −U c at x=1, equals the
        // inflow from the left face) and gives exactly 0.
        let g = grid(4);
        let c = 3.0;
        let u = 1.5;
        let op = assemble_convection_diffusion_robin(&g, 1.0, u).unwrap();
        let out = op.apply(&[c; 4]).unwrap();
        let expected0 = -u * c / g.spacing();
        assert!((out[0] - expected0).abs() < 1e-12 * expected0.abs());
        assert!(out[0] < 0.0);
        for (i, &v) in out.iter().enumerate().skip(1) {
            assert!(v.abs() < 1e-10, "row {i} should balance, got {v}");
        }
    }

    #[test]
    fn robin_off_diagonals_nonnegative() {
        for (d, u) in [(1.0, 0.0), (0.3, 2.0), (2.0, 0.01), (0.05, 5.0)] {
            let op = assemble_convection_diffusion_robin(&grid(16), d, u).unwrap();
            assert!(op.min_off_diagonal() >= 0.0);
        }
    }

    #[test]
    fn quadratic_field_second_difference_is_exact_in_the_interior() {
        // The 3-point stencil differentiates quadratics exactly away from
        // the boundary rows.
        for n in [8, 32] {
            let g = grid(n);
            let d = 1.7;
            let op = assemble_diffusion_neumann(&g, d).unwrap();
            let v = g.sample(|x| x * x);
            let out = op.apply(&v).unwrap();
            for (i, &o) in out.iter().enumerate().take(n - 1).skip(1) {
                assert!((o - 2.0 * d).abs() < 1e-9, "n={n} i={i} got {o}");
            }
        }
    }

    #[test]
    fn apply_zero_field_is_zero() {
        let op = assemble_convection_diffusion_robin(&grid(6), 1.0, 0.7).unwrap();
        let out = op.apply(&[0.0; 6]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_basis_vector_reads_off_first_column() {
        let op = assemble_diffusion_neumann(&grid(4), 1.0).unwrap();
        let mut e0 = vec![0.0; 4];
        e0[0] = 1.0;
        let col = op.apply(&e0).unwrap();
        assert_eq!(col, vec![op.diag()[0], op.lower()[0], 0.0, 0.0]);
    }

    #[test]
    fn apply_length_mismatch() {
        let op = assemble_diffusion_neumann(&grid(4), 1.0).unwrap();
        assert!(matches!(
            op.apply(&[1.0, 2.0]),
            Err(Error::LengthMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn solve_constant_rhs_against_neumann_kernel() {
        // Constants lie in the kernel, so (λI − A) c/λ = c.
        let op = assemble_diffusion_neumann(&grid(9), 1.3).unwrap();
        let lambda = 4.0;
        let w = op.solve_shifted(lambda, &[2.0; 9]).unwrap();
        for &wi in &w {
            assert!((wi - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn solve_then_apply_round_trip() {
        let op = assemble_convection_diffusion_robin(&grid(12), 0.6, 1.1).unwrap();
        let rhs: Vec<f64> = (0..12).map(|i| ((i * 7 + 3) % 5) as f64 * 0.25 + 0.1).collect();
        let shift = 2.5;
        let w = op.solve_shifted(shift, &rhs).unwrap();
        let aw = op.apply(&w).unwrap();
        let norm = rhs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..12 {
            let residual = shift * w[i] - aw[i] - rhs[i];
            assert!(residual.abs() <= 1e-10 * norm, "row {i}: {residual}");
        }
    }

    #[test]
    fn solve_refuses_without_dominance() {
        let op = assemble_diffusion_neumann(&grid(5), 1.0).unwrap();
        assert!(matches!(
            op.solve_shifted(0.0, &[1.0; 5]),
            Err(Error::NotDiagonallyDominant { .. })
        ));
        assert!(matches!(
            op.solve_shifted(-3.0, &[1.0; 5]),
            Err(Error::NotDiagonallyDominant { .. })
        ));
    }

    #[test]
    fn solve_length_mismatch() {
        let op = assemble_diffusion_neumann(&grid(5), 1.0).unwrap();
        assert!(op.solve_shifted(1.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn solve_preserves_nonnegativity() {
        let op = assemble_convection_diffusion_robin(&grid(20), 0.2, 3.0).unwrap();
        let rhs: Vec<f64> = (0..20).map(|i| ((i * 13 + 5) % 7) as f64).collect();
        let w = op.solve_shifted(0.05, &rhs).unwrap();
        assert!(w.iter().all(|&v| v >= 0.0));
    }
}
