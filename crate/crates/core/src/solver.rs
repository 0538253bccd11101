//! Time integration of the four-field system and of scalar
//! convection-diffusion equations.
//!
//! One step treats the reaction explicitly and the transport implicitly
//! (backward Euler): `u⁺ = (I/dt − A)⁻¹ (u + dt·F(u)) / dt`. The implicit
//! solve is an M-matrix inverse and maps nonnegative data to nonnegative
//! data, so the whole step preserves the nonnegative cone as long as the
//! explicit half-step `u + dt·F(u)` does — which the time-step bound
//! `dt · L_reaction ≤ 1` guarantees on the dissipative box. A step that
//! still produces a negative value fails loudly; values are never clipped,
//! because clipping would silently break every comparison-principle
//! property the verification experiments rely on.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{
    dissipative_box, min_value, reaction, reaction_lipschitz, sup_diff, sup_norm, Parameters,
    State,
};
use crate::operators::{
    assemble_convection_diffusion_robin, assemble_diffusion_neumann, TridiagonalOperator,
};

/// Safety factor applied when choosing a time step from the reaction bound.
const DT_SAFETY: f64 = 0.9;

/// Default number of steps between recorded snapshots.
pub const DEFAULT_SNAPSHOT_EVERY: usize = 10;

/// Default sup-norm rate threshold for steady-state detection.
pub const DEFAULT_STEADY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexBackwardEuler,
}

/// Time-integration settings. `steady_tol = 0` disables early stopping.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_every: usize,
    pub steady_tol: f64,
}

impl SolverConfig {
    pub fn new(grid: Grid, dt: f64, t_end: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::NonpositiveParameter {
                name: "dt",
                value: dt,
            });
        }
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::NonpositiveParameter {
                name: "t_end",
                value: t_end,
            });
        }
        if dt > t_end {
            return Err(Error::TimeStepTooLarge { dt, bound: t_end });
        }
        Ok(SolverConfig {
            grid,
            dt,
            t_end,
            scheme: Scheme::ImexBackwardEuler,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            steady_tol: DEFAULT_STEADY_TOL,
        })
    }

    /// Config with the time step chosen automatically from the reaction
    /// bound for this parameter set and initial state.
    pub fn auto(grid: Grid, params: &Parameters, initial: &State, t_end: f64) -> Result<Self> {
        let dt = auto_dt(params, initial).min(t_end);
        SolverConfig::new(grid, dt, t_end)
    }
}

/// Largest admissible time step times the safety factor: the explicit
/// half-step keeps the nonnegative cone as long as `dt · L ≤ 1`.
pub fn auto_dt(params: &Parameters, initial: &State) -> f64 {
    let bounds = dissipative_box(params, initial);
    DT_SAFETY / reaction_lipschitz(params, &bounds)
}

/// The four per-field transport operators with boundary conditions baked in.
#[derive(Debug, Clone)]
pub struct FieldOperators {
    pub s: TridiagonalOperator,
    pub i: TridiagonalOperator,
    pub r: TridiagonalOperator,
    pub b: TridiagonalOperator,
}

impl FieldOperators {
    pub fn new(params: &Parameters, grid: &Grid) -> Result<Self> {
        Ok(FieldOperators {
            s: assemble_diffusion_neumann(grid, params.d1)?,
            i: assemble_diffusion_neumann(grid, params.d2)?,
            r: assemble_diffusion_neumann(grid, params.d3)?,
            b: assemble_convection_diffusion_robin(grid, params.d4, params.u)?,
        })
    }
}

/// Per-snapshot norm record: sup norms of the four fields, the lower
/// envelopes of `S`, `I`, `B`, and the sup distance of the host total
/// `V = S + I + R` from `b/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotNorms {
    pub sup_s: f64,
    pub sup_i: f64,
    pub sup_r: f64,
    pub sup_b: f64,
    pub min_s: f64,
    pub min_i: f64,
    pub min_b: f64,
    pub v_dist: f64,
}

impl SnapshotNorms {
    fn of(state: &State, m_star: f64) -> Self {
        let v_dist = state
            .s
            .iter()
            .zip(&state.i)
            .zip(&state.r)
            .fold(0.0f64, |m, ((&s, &i), &r)| m.max((s + i + r - m_star).abs()));
        SnapshotNorms {
            sup_s: sup_norm(&state.s),
            sup_i: sup_norm(&state.i),
            sup_r: sup_norm(&state.r),
            sup_b: sup_norm(&state.b),
            min_s: min_value(&state.s),
            min_i: min_value(&state.i),
            min_b: min_value(&state.b),
            v_dist,
        }
    }
}

/// Recorded run: snapshot times, states, norms, and the time at which the
/// sup-norm rate dropped below the steady threshold (if it did).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<State>,
    pub norms: Vec<SnapshotNorms>,
    pub steady_at: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("trajectory never empty")
    }
}

/// Scalar-field run record.
#[derive(Debug, Clone)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub steady_at: Option<f64>,
}

impl ScalarTrajectory {
    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("trajectory never empty")
    }
}

fn explicit_half_step(
    field: &'static str,
    u: &[f64],
    rate: &[f64],
    dt: f64,
    time: f64,
) -> Result<Field> {
    let mut star = vec![0.0; u.len()];
    for c in 0..u.len() {
        let v = u[c] + dt * rate[c];
        if !v.is_finite() {
            return Err(Error::NonFinite {
                field,
                cell: c,
                time,
            });
        }
        if v < 0.0 {
            return Err(Error::NegativeValue {
                field,
                cell: c,
                value: v,
                time,
            });
        }
        star[c] = v / dt;
        // star now holds (u + dt F)/dt, the right-hand side of the solve.
    }
    Ok(star)
}

/// One IMEX step of the four-field system.
pub fn step(
    state: &State,
    params: &Parameters,
    ops: &FieldOperators,
    dt: f64,
) -> Result<State> {
    let rates = reaction(state, params);
    let shift = 1.0 / dt;
    let t = state.time;
    let s = ops
        .s
        .solve_shifted(shift, &explicit_half_step("S", &state.s, &rates.ds, dt, t)?)?;
    let i = ops
        .i
        .solve_shifted(shift, &explicit_half_step("I", &state.i, &rates.di, dt, t)?)?;
    let r = ops
        .r
        .solve_shifted(shift, &explicit_half_step("R", &state.r, &rates.dr, dt, t)?)?;
    let b = ops
        .b
        .solve_shifted(shift, &explicit_half_step("B", &state.b, &rates.db, dt, t)?)?;
    Ok(State {
        s,
        i,
        r,
        b,
        time: state.time + dt,
    })
}

/// Integrate up to `t_end` (or until the per-step rate falls below
/// `steady_tol`), starting from nonnegative initial data.
pub fn simulate(initial: &State, params: &Parameters, config: &SolverConfig) -> Result<Trajectory> {
    initial.check(&config.grid)?;
    let bound = 1.0 / reaction_lipschitz(params, &dissipative_box(params, initial));
    if config.dt > bound {
        return Err(Error::TimeStepTooLarge {
            dt: config.dt,
            bound,
        });
    }
    let ops = FieldOperators::new(params, &config.grid)?;
    let m_star = params.m_star();
    let dt = config.dt;
    let n_steps = (config.t_end / dt).ceil() as usize;
    let cadence = config.snapshot_every.max(1);

    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        norms: Vec::new(),
        steady_at: None,
    };
    let mut state = initial.clone();
    state.time = 0.0;
    traj.times.push(0.0);
    traj.norms.push(SnapshotNorms::of(&state, m_star));
    traj.snapshots.push(state.clone());

    for k in 1..=n_steps {
        let next = step(&state, params, &ops, dt)?;
        let rate = next.max_field_diff(&state) / dt;
        state = next;
        state.time = k as f64 * dt;
        let steady = config.steady_tol > 0.0 && rate < config.steady_tol;
        if k.is_multiple_of(cadence) || k == n_steps || steady {
            traj.times.push(state.time);
            traj.norms.push(SnapshotNorms::of(&state, m_star));
            traj.snapshots.push(state.clone());
        }
        if steady {
            traj.steady_at = Some(state.time);
            break;
        }
    }
    Ok(traj)
}

fn check_scalar_inputs(
    grid: &Grid,
    initial: &[f64],
    source: &[f64],
    decay: f64,
) -> Result<()> {
    grid.check_len(initial)?;
    grid.check_len(source)?;
    if !decay.is_finite() || decay <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "decay",
            value: decay,
        });
    }
    for &v in source {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonpositiveParameter {
                name: "source",
                value: v,
            });
        }
    }
    for (c, &v) in initial.iter().enumerate() {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::NegativeInitial {
                field: "w",
                cell: c,
                value: v,
            });
        }
    }
    Ok(())
}

/// Integrate the scalar equation `∂w/∂t = D ∂²w/∂x² − U ∂w/∂x + g(x) − λ w`
/// with the bacterial boundary conditions (zero total flux upstream, zero
/// gradient downstream). Same splitting and positivity contract as `step`;
/// here the explicit bound is simply `dt · λ ≤ 1`.
pub fn simulate_scalar(
    initial: &Field,
    diffusivity: f64,
    convection: f64,
    source: &Field,
    decay: f64,
    config: &SolverConfig,
) -> Result<ScalarTrajectory> {
    check_scalar_inputs(&config.grid, initial, source, decay)?;
    let bound = 1.0 / decay;
    if config.dt > bound {
        return Err(Error::TimeStepTooLarge {
            dt: config.dt,
            bound,
        });
    }
    let op = assemble_convection_diffusion_robin(&config.grid, diffusivity, convection)?;
    let dt = config.dt;
    let shift = 1.0 / dt;
    let n = config.grid.n_cells();
    let n_steps = (config.t_end / dt).ceil() as usize;
    let cadence = config.snapshot_every.max(1);

    let mut traj = ScalarTrajectory {
        times: vec![0.0],
        snapshots: vec![initial.clone()],
        steady_at: None,
    };
    let mut w = initial.clone();
    let mut rate_field = vec![0.0; n];
    for k in 1..=n_steps {
        for c in 0..n {
            rate_field[c] = source[c] - decay * w[c];
        }
        let star = explicit_half_step("w", &w, &rate_field, dt, (k - 1) as f64 * dt)?;
        let next = op.solve_shifted(shift, &star)?;
        let rate = sup_diff(&next, &w) / dt;
        w = next;
        let t = k as f64 * dt;
        let steady = config.steady_tol > 0.0 && rate < config.steady_tol;
        if k.is_multiple_of(cadence) || k == n_steps || steady {
            traj.times.push(t);
            traj.snapshots.push(w.clone());
        }
        if steady {
            traj.steady_at = Some(t);
            break;
        }
    }
    Ok(traj)
}

/// Steady state of the scalar equation, solved directly:
/// `(λ I − A) w = g`. Strictly positive for strictly positive sources.
pub fn steady_state_scalar(
    diffusivity: f64,
    convection: f64,
    source: &Field,
    decay: f64,
    grid: &Grid,
) -> Result<Field> {
    check_scalar_inputs(grid, &vec![0.0; grid.n_cells()], source, decay)?;
    let op = assemble_convection_diffusion_robin(grid, diffusivity, convection)?;
    op.solve_shifted(decay, source)
}

/// Steady-state defect `‖A u + F(u)‖∞` of the semi-discrete system over all
/// four fields.
pub fn residual(state: &State, params: &Parameters, ops: &FieldOperators) -> Result<f64> {
    let rates = reaction(state, params);
    let mut worst = 0.0f64;
    for (op, field, rate) in [
        (&ops.s, &state.s, &rates.ds),
        (&ops.i, &state.i, &rates.di),
        (&ops.r, &state.r, &rates.dr),
        (&ops.b, &state.b, &rates.db),
    ] {
        let au = op.apply(field)?;
        for c in 0..field.len() {
            worst = worst.max((au[c] + rate[c]).abs());
        }
    }
    Ok(worst)
}
