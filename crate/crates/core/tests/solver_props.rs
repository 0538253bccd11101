//! Solver-level oracles and invariants: matrix-exponential comparison for
//! the implicit transport step, the total-host comparison equation,
//! positivity, invariance of the disease-free set, and discrete comparison
//! monotonicity.

mod common;

use common::{expm, lcg_values, Dense};
use proptest::prelude::*;
use sirsb_core::{
    assemble_diffusion_neumann, simulate, simulate_scalar, Grid, Parameters, SolverConfig, State,
};

/// Backward-Euler transport without reaction converges at first order to
/// the exact semigroup.
#[test]
fn heat_step_matches_dense_matrix_exponential() {
    let n = 8;
    let grid = Grid::new(n).unwrap();
    let op = assemble_diffusion_neumann(&grid, 1.0).unwrap();
    let dense = Dense::from_tridiagonal(&op);
    let v0 = lcg_values(11, n, 0.5, 2.0);
    let horizon = 0.125;
    let exact = expm(&dense, horizon).matvec(&v0);

    let run = |steps: usize| -> Vec<f64> {
        let dt = horizon / steps as f64;
        let mut w = v0.clone();
        for _ in 0..steps {
            let rhs: Vec<f64> = w.iter().map(|&x| x / dt).collect();
            w = op.solve_shifted(1.0 / dt, &rhs).unwrap();
        }
        w
    };
    let err = |steps: usize| -> f64 {
        run(steps)
            .iter()
            .zip(&exact)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    };
    let e1 = err(16);
    let e2 = err(32);
    let e3 = err(64);
    assert!(e1 < 0.05, "coarse error {e1}");
    for (a, b) in [(e1, e2), (e2, e3)] {
        let ratio = b / a;
        assert!(
            (0.35..0.65).contains(&ratio),
            "halving dt should halve the error: {e1} {e2} {e3}"
        );
    }
}

/// The host total from the coupled run reproduces the standalone scalar
/// run snapshot by snapshot, and obeys the exponential envelope toward b/d.
#[test]
fn host_total_matches_scalar_comparison_run() {
    let grid = Grid::new(64).unwrap();
    let params = Parameters::baseline();
    let n = grid.n_cells();
    let s0 = lcg_values(3, n, 0.5, 2.5);
    let i0 = lcg_values(4, n, 0.0, 0.8);
    let r0 = lcg_values(5, n, 0.0, 0.8);
    let b0 = lcg_values(6, n, 0.0, 1.0);
    let initial = State::new(&grid, s0, i0, r0, b0, 0.0).unwrap();

    let mut config = SolverConfig::auto(grid.clone(), &params, &initial, 15.0).unwrap();
    config.steady_tol = 0.0;
    config.snapshot_every = 7;
    let traj = simulate(&initial, &params, &config).unwrap();

    let v0: Vec<f64> = (0..n)
        .map(|c| initial.s[c] + initial.i[c] + initial.r[c])
        .collect();
    let source = grid.constant(params.b);
    let scalar = simulate_scalar(&v0, params.d1, 0.0, &source, params.d, &config).unwrap();

    assert_eq!(traj.times.len(), scalar.times.len());
    let mut worst = 0.0f64;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        assert_eq!(traj.times[k], scalar.times[k]);
        for c in 0..n {
            let v = snap.s[c] + snap.i[c] + snap.r[c];
            worst = worst.max((v - scalar.snapshots[k][c]).abs());
        }
    }
    assert!(worst <= 1e-10, "coupled vs scalar host total: {worst}");

    let m_star = params.m_star();
    let v0_dist = v0.iter().fold(0.0f64, |m, &v| m.max((v - m_star).abs()));
    for (k, &t) in traj.times.iter().enumerate() {
        let envelope = v0_dist * (-params.d * t).exp() * (1.0 + 1e-8);
        assert!(
            traj.norms[k].v_dist <= envelope,
            "t={t}: {} > {envelope}",
            traj.norms[k].v_dist
        );
    }
}

/// Running max of the summed sup norms stays under the a-priori horizon
/// bound.
#[test]
fn trajectory_respects_the_apriori_bound() {
    let grid = Grid::new(24).unwrap();
    let params = Parameters::baseline();
    let n = grid.n_cells();
    let initial = State::new(
        &grid,
        lcg_values(21, n, 0.0, 2.0),
        lcg_values(22, n, 0.0, 1.0),
        lcg_values(23, n, 0.0, 1.0),
        lcg_values(24, n, 0.0, 3.0),
        0.0,
    )
    .unwrap();
    let horizon = 1.0;
    let mut config = SolverConfig::auto(grid.clone(), &params, &initial, horizon).unwrap();
    config.snapshot_every = 1;
    config.steady_tol = 0.0;
    let traj = simulate(&initial, &params, &config).unwrap();
    let bound = sirsb_core::appendix_bound_formula(&params, &initial, horizon);
    let running_max = traj
        .snapshots
        .iter()
        .map(|s| s.total_sup_norm())
        .fold(0.0f64, f64::max);
    assert!(running_max <= bound, "{running_max} > {bound}");
}

fn tied_params(raw: [f64; 13]) -> Parameters {
    Parameters {
        b: raw[0],
        d: raw[1],
        gamma: raw[2],
        sigma: raw[3],
        delta: raw[4],
        xi: raw[5],
        beta1: raw[6],
        beta2: raw[7],
        k: raw[8],
        u: raw[9],
        k_b: raw[10],
        g: raw[11],
        d1: raw[12],
        d2: raw[12],
        d3: raw[12],
        d4: raw[12],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// No field of any snapshot ever goes negative under the automatic
    /// step bound.
    #[test]
    fn snapshots_stay_nonnegative(
        raw in proptest::array::uniform13(0.05f64..2.0),
        n in 4usize..12,
        seed in any::<u64>(),
        amp in 0.1f64..3.0,
    ) {
        let params = tied_params(raw);
        let grid = Grid::new(n).unwrap();
        let initial = State::new(
            &grid,
            lcg_values(seed ^ 1, n, 0.0, amp * params.m_star()),
            lcg_values(seed ^ 2, n, 0.0, amp * params.m_star()),
            lcg_values(seed ^ 3, n, 0.0, amp * params.m_star()),
            lcg_values(seed ^ 4, n, 0.0, amp),
            0.0,
        ).unwrap();
        let mut config = SolverConfig::auto(grid.clone(), &params, &initial, 0.5).unwrap();
        config.snapshot_every = 1;
        let traj = simulate(&initial, &params, &config).unwrap();
        for snap in &traj.snapshots {
            for (_, field) in snap.fields() {
                prop_assert!(field.iter().all(|&v| v >= 0.0));
            }
        }
    }

    /// Initially disease-free states stay exactly disease-free.
    #[test]
    fn disease_free_invariance_is_exact(
        raw in proptest::array::uniform13(0.05f64..2.0),
        n in 4usize..12,
        seed in any::<u64>(),
    ) {
        let params = tied_params(raw);
        let grid = Grid::new(n).unwrap();
        let initial = State::new(
            &grid,
            lcg_values(seed ^ 5, n, 0.0, 2.0 * params.m_star()),
            vec![0.0; n],
            lcg_values(seed ^ 6, n, 0.0, params.m_star()),
            vec![0.0; n],
            0.0,
        ).unwrap();
        let config = SolverConfig::auto(grid.clone(), &params, &initial, 0.5).unwrap();
        let traj = simulate(&initial, &params, &config).unwrap();
        for snap in &traj.snapshots {
            prop_assert!(snap.i.iter().all(|&v| v == 0.0));
            prop_assert!(snap.b.iter().all(|&v| v == 0.0));
        }
    }

    /// Pointwise-ordered scalar initial data stay ordered at every recorded
    /// time (discrete comparison principle; exact because every operation
    /// in the step is monotone).
    #[test]
    fn ordered_scalar_initials_stay_ordered(
        n in 4usize..16,
        diffusivity in 0.05f64..2.0,
        convection in 0.0f64..2.0,
        decay in 0.1f64..2.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(n).unwrap();
        let source = grid.sample(|x| 0.5 + x);
        let low = lcg_values(seed ^ 7, n, 0.0, 2.0);
        let bump = lcg_values(seed ^ 8, n, 0.0, 1.5);
        let high: Vec<f64> = low.iter().zip(&bump).map(|(&a, &b)| a + b).collect();
        let mut config = SolverConfig::new(grid.clone(), (0.9 / decay).min(0.2), 1.0).unwrap();
        config.snapshot_every = 1;
        config.steady_tol = 0.0;
        let t_low = simulate_scalar(&low, diffusivity, convection, &source, decay, &config).unwrap();
        let t_high = simulate_scalar(&high, diffusivity, convection, &source, decay, &config).unwrap();
        for (a, b) in t_low.snapshots.iter().zip(&t_high.snapshots) {
            for c in 0..n {
                prop_assert!(a[c] <= b[c], "ordering broken at cell {c}");
            }
        }
    }
}
