//! Dense-matrix oracles and convergence checks for the transport operators.

mod common;

use common::{lcg_values, Dense};
use proptest::prelude::*;
use sirsb_core::{
    assemble_convection_diffusion_robin, assemble_diffusion_neumann, Grid, TridiagonalOperator,
};

fn operators_under_test(n: usize) -> Vec<TridiagonalOperator> {
    let grid = Grid::new(n).unwrap();
    vec![
        assemble_diffusion_neumann(&grid, 1.0).unwrap(),
        assemble_diffusion_neumann(&grid, 0.05).unwrap(),
        assemble_convection_diffusion_robin(&grid, 0.7, 0.0).unwrap(),
        assemble_convection_diffusion_robin(&grid, 0.3, 2.5).unwrap(),
        assemble_convection_diffusion_robin(&grid, 2.0, 0.4).unwrap(),
    ]
}

#[test]
fn apply_matches_dense_matvec() {
    for n in [3, 5, 8, 16] {
        for (k, op) in operators_under_test(n).iter().enumerate() {
            let dense = Dense::from_tridiagonal(op);
            let v = lcg_values(n as u64 * 31 + k as u64, n, -2.0, 2.0);
            let fast = op.apply(&v).unwrap();
            let slow = dense.matvec(&v);
            let scale = slow.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
            for c in 0..n {
                assert!(
                    (fast[c] - slow[c]).abs() <= 1e-14 * scale,
                    "n={n} op={k} cell={c}: {} vs {}",
                    fast[c],
                    slow[c]
                );
            }
        }
    }
}

#[test]
fn solve_shifted_matches_dense_lu() {
    let n = 8;
    for (k, op) in operators_under_test(n).iter().enumerate() {
        for shift in [0.1, 1.0, 17.0] {
            let mut shifted = Dense::from_tridiagonal(op);
            shifted.scale(-1.0);
            shifted.add_scaled_identity(shift);
            let rhs = lcg_values(97 + k as u64, n, -1.0, 3.0);
            let fast = op.solve_shifted(shift, &rhs).unwrap();
            let slow = shifted.lu_solve(&rhs);
            let scale = slow.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
            for c in 0..n {
                assert!(
                    (fast[c] - slow[c]).abs() <= 1e-12 * scale,
                    "op={k} shift={shift} cell={c}: {} vs {}",
                    fast[c],
                    slow[c]
                );
            }
        }
    }
}

#[test]
fn diffusion_stencil_is_second_order_in_the_interior() {
    // cos(πx) satisfies the zero-flux conditions; interior truncation error
    // of the 3-point stencil shrinks like h².
    let diffusivity = 1.3;
    let mut errors = Vec::new();
    for n in [16, 32, 64, 128] {
        let grid = Grid::new(n).unwrap();
        let op = assemble_diffusion_neumann(&grid, diffusivity).unwrap();
        let v = grid.sample(|x| (std::f64::consts::PI * x).cos());
        let av = op.apply(&v).unwrap();
        let mut worst = 0.0f64;
        for (c, &a) in av.iter().enumerate().take(n - 1).skip(1) {
            let x = grid.centers()[c];
            let exact =
                -diffusivity * std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x).cos();
            worst = worst.max((a - exact).abs());
        }
        errors.push(worst);
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (3.0..5.0).contains(&ratio),
            "halving h should quarter the interior error: {errors:?}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shifted_solves_preserve_nonnegativity(
        n in 3usize..24,
        diffusivity in 0.01f64..5.0,
        convection in 0.0f64..4.0,
        shift in 0.01f64..20.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(n).unwrap();
        let op = assemble_convection_diffusion_robin(&grid, diffusivity, convection).unwrap();
        let rhs = lcg_values(seed, n, 0.0, 5.0);
        let w = op.solve_shifted(shift, &rhs).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn solve_then_apply_recovers_the_rhs(
        n in 3usize..24,
        diffusivity in 0.01f64..5.0,
        convection in 0.0f64..4.0,
        shift in 0.05f64..20.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(n).unwrap();
        let op = assemble_convection_diffusion_robin(&grid, diffusivity, convection).unwrap();
        let rhs = lcg_values(seed, n, -3.0, 3.0);
        let w = op.solve_shifted(shift, &rhs).unwrap();
        let aw = op.apply(&w).unwrap();
        let norm = rhs.iter().fold(1e-30f64, |m, &v| m.max(v.abs()));
        for c in 0..n {
            prop_assert!((shift * w[c] - aw[c] - rhs[c]).abs() <= 1e-10 * norm);
        }
    }

    #[test]
    fn neumann_row_sums_vanish_and_off_diagonals_stay_nonnegative(
        n in 3usize..64,
        diffusivity in 0.001f64..10.0,
        convection in 0.0f64..6.0,
    ) {
        let grid = Grid::new(n).unwrap();
        let neumann = assemble_diffusion_neumann(&grid, diffusivity).unwrap();
        for s in neumann.row_sums() {
            prop_assert_eq!(s, 0.0);
        }
        let robin = assemble_convection_diffusion_robin(&grid, diffusivity, convection).unwrap();
        prop_assert!(robin.min_off_diagonal() >= 0.0);
    }
}
