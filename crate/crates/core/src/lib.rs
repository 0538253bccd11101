//! Numerical laboratory for a SIRS-B epidemic model: susceptible,
//! infectious and recovered hosts coupled to a waterborne bacterial
//! reservoir on the unit interval, with host diffusion, bacterial
//! convection-diffusion, and two transmission routes.
//!
//! The crate provides
//!
//! * cell-centered finite-volume transport operators with the model's
//!   boundary conditions ([`operators`]),
//! * the reaction terms, parameter validation and the disease-free
//!   equilibrium ([`model`]),
//! * a positivity-preserving IMEX integrator for the coupled system and for
//!   scalar comparison equations ([`solver`]),
//! * the basic reproduction number `R0` (spatial and space-free variants)
//!   and principal eigenvalues of the linearized infection operator
//!   ([`spectral`]),
//! * executable threshold experiments — extinction below `R0 = 1`,
//!   persistence above it, comparison-equation checks and a-priori bounds
//!   ([`verify`]),
//! * plain-text config parsing and CSV/report emission ([`io`]).

pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod operators;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use model::{
    dissipative_box, min_value, reaction, reaction_lipschitz, sup_diff, sup_norm, Parameters,
    Reaction, State, StateBox,
};
pub use operators::{
    assemble_convection_diffusion_robin, assemble_diffusion_neumann, OperatorKind,
    TridiagonalOperator,
};
pub use solver::{
    auto_dt, residual, simulate, simulate_scalar, steady_state_scalar, step, FieldOperators,
    ScalarTrajectory, Scheme, SnapshotNorms, SolverConfig, Trajectory,
};
pub use spectral::{
    principal_eigen_theta, r0_ode, r0_pde, sign_consistency, spectral_radius_2x2, Consistency,
    InfectionBlocks, SignConsistency, SpectralReport,
};
pub use io::{parse_run_config, InitialSpec, RunConfig};
pub use verify::{
    appendix_bound_formula, default_sweep_ranges, experiment_appendix_bound,
    experiment_extinction, experiment_persistence, experiment_population_law, experiment_prop41,
    extinction_ensemble, persistence_ensemble, perturbed_dfe, preset_with_r0, sweep_threshold,
    ExperimentReport, SweepOutcome, SweepRow, SweepTable, Verdict,
};
