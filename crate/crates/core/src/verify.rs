//! Executable threshold experiments at desk scale.
//!
//! Each experiment runs the solver on concrete ensembles, measures the
//! quantities the threshold theory speaks about, and returns a pass/fail
//! verdict with its metrics. Attractivity claims are operationalized over a
//! finite seeded ensemble; the persistence floor is the minimum over a
//! trailing 20% time window (the theory asserts existence of a positive
//! floor, not its value). Runs whose preconditions fail report
//! `Indeterminate` rather than `Fail`.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{min_value, sup_diff, sup_norm, Parameters, State};
use crate::solver::{
    auto_dt, residual, simulate, simulate_scalar, steady_state_scalar, FieldOperators,
    SolverConfig,
};
use crate::spectral::{r0_pde, sign_consistency, Consistency, DEFAULT_EIGEN_TOL};

/// Distance from the disease-free equilibrium that counts as "extinct".
pub const EXTINCTION_DISTANCE_TOL: f64 = 1e-3;
/// Steady-state defect required of a persistent terminal state.
pub const PERSISTENCE_RESIDUAL_TOL: f64 = 1e-6;
/// Slack applied to the analytic susceptible floor to absorb discretization.
pub const S_FLOOR_SLACK: f64 = 0.9;
/// Terminal infection level below which a sweep sample counts as extinct.
pub const SWEEP_EXTINCT_LEVEL: f64 = 1e-4;
/// Terminal infection level above which a sweep sample counts as persistent.
pub const SWEEP_PERSISTENT_LEVEL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Indeterminate => write!(f, "indeterminate"),
        }
    }
}

/// Outcome of one experiment: verdict, named metrics, free-form notes
/// (precondition diagnostics), and wall-clock runtime.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub params: Option<Parameters>,
    pub r0: Option<f64>,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    fn new(name: &str) -> Self {
        ExperimentReport {
            name: name.to_string(),
            params: None,
            r0: None,
            verdict: Verdict::Indeterminate,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }
}

/// Per-run solver settings: the caller's config, with the step shrunk when
/// an ensemble member's box demands it.
fn config_for_run(config: &SolverConfig, params: &Parameters, initial: &State) -> SolverConfig {
    let mut c = config.clone();
    c.dt = c.dt.min(auto_dt(params, initial));
    c
}

/// Uniform random state with per-field amplitudes; every entry nonnegative.
fn random_state(grid: &Grid, rng: &mut ChaCha8Rng, amps: [f64; 4]) -> State {
    let n = grid.n_cells();
    let mut field = |amp: f64| -> Field { (0..n).map(|_| amp * rng.random::<f64>()).collect() };
    State {
        s: field(amps[0]),
        i: field(amps[1]),
        r: field(amps[2]),
        b: field(amps[3]),
        time: 0.0,
    }
}

/// The disease-free state with a relative multiplicative kick on `S` and
/// small nonnegative seeds on `I`, `R`, `B`. `amplitude` must stay in
/// (0, 2) so `S` remains positive.
pub fn perturbed_dfe(
    params: &Parameters,
    grid: &Grid,
    seed: u64,
    amplitude: f64,
) -> Result<State> {
    if !amplitude.is_finite() || amplitude <= 0.0 || amplitude >= 2.0 {
        return Err(Error::NonpositiveParameter {
            name: "initial_amplitude",
            value: amplitude,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_cells();
    let m_star = params.m_star();
    let s = (0..n)
        .map(|_| m_star * (1.0 + amplitude * (rng.random::<f64>() - 0.5)))
        .collect();
    let half = 0.5 * amplitude;
    let i = (0..n).map(|_| half * m_star * rng.random::<f64>()).collect();
    let r = (0..n).map(|_| half * m_star * rng.random::<f64>()).collect();
    let b = (0..n).map(|_| half * rng.random::<f64>()).collect();
    State::new(grid, s, i, r, b, 0.0)
}

/// Default extinction ensemble: eight random nonnegative states with sup
/// norm at most `5 m*`, one state that is disease-free except for bacteria,
/// and one that is disease-free except for infectious hosts.
pub fn extinction_ensemble(params: &Parameters, grid: &Grid, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_star = params.m_star();
    let cap = 5.0 * m_star;
    let mut out = Vec::with_capacity(10);
    for _ in 0..8 {
        let amps = [
            cap * rng.random::<f64>(),
            cap * rng.random::<f64>(),
            cap * rng.random::<f64>(),
            cap * rng.random::<f64>(),
        ];
        out.push(random_state(grid, &mut rng, amps));
    }
    let mut big_b = State::dfe(params, grid);
    let b_cap = 5.0 * m_star.max(params.k_b);
    big_b.b = (0..grid.n_cells())
        .map(|_| b_cap * (0.2 + 0.8 * rng.random::<f64>()))
        .collect();
    out.push(big_b);
    let mut big_i = State::dfe(params, grid);
    big_i.i = (0..grid.n_cells())
        .map(|_| cap * (0.2 + 0.8 * rng.random::<f64>()))
        .collect();
    out.push(big_i);
    out
}

/// Default persistence ensemble: one initial with bacteria only, one with
/// infectious hosts only, and two generic perturbed states.
pub fn persistence_ensemble(params: &Parameters, grid: &Grid, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_star = params.m_star();
    let n = grid.n_cells();
    let mut only_b = State::dfe(params, grid);
    only_b.b = (0..n).map(|_| 0.5 * rng.random::<f64>() + 0.01).collect();
    let mut only_i = State::dfe(params, grid);
    only_i.i = (0..n)
        .map(|_| 0.5 * m_star * rng.random::<f64>() + 0.01 * m_star)
        .collect();
    let g1 = perturbed_dfe(params, grid, rng.random::<u64>(), 0.5).expect("amplitude in range");
    let g2 = perturbed_dfe(params, grid, rng.random::<u64>(), 1.0).expect("amplitude in range");
    vec![only_b, only_i, g1, g2]
}

fn is_identically_zero(f: &[f64]) -> bool {
    f.iter().all(|&v| v == 0.0)
}

/// Extinction below threshold: every ensemble member must come within
/// `EXTINCTION_DISTANCE_TOL` of the disease-free equilibrium (in the summed
/// sup-norm metric) by the end of the run.
pub fn experiment_extinction(
    params: &Parameters,
    initials: &[State],
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("extinction");
    report.params = Some(*params);
    params.validate()?;

    let spectral = r0_pde(&config.grid, params, DEFAULT_EIGEN_TOL)?;
    if !spectral.converged {
        return Err(Error::NoConvergence {
            iterations: spectral.iterations,
            residual: spectral.residual,
        });
    }
    report.r0 = Some(spectral.value);
    report.metric("r0_pde", spectral.value);
    if spectral.value >= 1.0 {
        report
            .notes
            .push(format!("precondition R0 < 1 violated (r0_pde = {})", spectral.value));
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    if !params.equal_host_diffusion() {
        report
            .notes
            .push("precondition D1 = D2 = D3 violated".to_string());
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let dfe = State::dfe(params, &config.grid);
    let mut worst = 0.0f64;
    for (k, initial) in initials.iter().enumerate() {
        let run_cfg = config_for_run(config, params, initial);
        let traj = simulate(initial, params, &run_cfg)?;
        let dist = traj.final_state().distance(&dfe);
        report.metric(&format!("final_distance_{k}"), dist);
        worst = worst.max(dist);
    }
    report.metric("final_distance_max", worst);
    report.metric("runs", initials.len() as f64);
    report.verdict = if worst < EXTINCTION_DISTANCE_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Persistence above threshold: over the trailing 20% of each run, the
/// space-time floors of `S`, `I`, `B` must be strictly positive, the
/// terminal state must be a numerical steady state, and the observed `S`
/// floor must respect the analytic lower bound
/// `b / (2 β1 m* + β2 + d)` up to slack.
pub fn experiment_persistence(
    params: &Parameters,
    initials: &[State],
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("persistence");
    report.params = Some(*params);
    params.validate()?;

    let spectral = r0_pde(&config.grid, params, DEFAULT_EIGEN_TOL)?;
    if !spectral.converged {
        return Err(Error::NoConvergence {
            iterations: spectral.iterations,
            residual: spectral.residual,
        });
    }
    report.r0 = Some(spectral.value);
    report.metric("r0_pde", spectral.value);
    if spectral.value <= 1.0 {
        report
            .notes
            .push(format!("precondition R0 > 1 violated (r0_pde = {})", spectral.value));
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    if !params.growth_below_death() {
        report
            .notes
            .push("precondition g < delta violated".to_string());
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    if !params.equal_host_diffusion() {
        report
            .notes
            .push("precondition D1 = D2 = D3 violated".to_string());
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    for (k, initial) in initials.iter().enumerate() {
        if is_identically_zero(&initial.i) && is_identically_zero(&initial.b) {
            report.notes.push(format!(
                "precondition violated: initial {k} has I = 0 and B = 0 identically"
            ));
            report.runtime_secs = start.elapsed().as_secs_f64();
            return Ok(report);
        }
    }

    let ops = FieldOperators::new(params, &config.grid)?;
    let s_floor_bound = params.b / (2.0 * params.beta1 * params.m_star() + params.beta2 + params.d);
    let mut floor_s = f64::INFINITY;
    let mut floor_i = f64::INFINITY;
    let mut floor_b = f64::INFINITY;
    let mut residual_max = 0.0f64;
    let mut terminal_positive = true;

    for initial in initials {
        let run_cfg = config_for_run(config, params, initial);
        let traj = simulate(initial, params, &run_cfg)?;
        let t_last = *traj.times.last().unwrap();
        let window_start = 0.8 * t_last;
        for (k, &t) in traj.times.iter().enumerate() {
            if t < window_start {
                continue;
            }
            floor_s = floor_s.min(traj.norms[k].min_s);
            floor_i = floor_i.min(traj.norms[k].min_i);
            floor_b = floor_b.min(traj.norms[k].min_b);
        }
        let terminal = traj.final_state();
        residual_max = residual_max.max(residual(terminal, params, &ops)?);
        terminal_positive = terminal_positive
            && min_value(&terminal.s) > 0.0
            && min_value(&terminal.i) > 0.0
            && min_value(&terminal.b) > 0.0;
    }

    let eta_hat = floor_s.min(floor_i).min(floor_b);
    report.metric("floor_s", floor_s);
    report.metric("floor_i", floor_i);
    report.metric("floor_b", floor_b);
    report.metric("eta_hat", eta_hat);
    report.metric("residual_max", residual_max);
    report.metric("s_floor_bound", s_floor_bound);
    report.metric("runs", initials.len() as f64);

    let pass = eta_hat > 0.0
        && residual_max < PERSISTENCE_RESIDUAL_TOL
        && terminal_positive
        && floor_s >= S_FLOOR_SLACK * s_floor_bound;
    report.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Scalar comparison equation: all initials must settle on one strictly
/// positive limit that matches the direct steady solve; with no convection
/// and constant source the limit is source/decay in closed form.
pub fn experiment_prop41(
    diffusivity: f64,
    convection: f64,
    source: &Field,
    decay: f64,
    initials: &[Field],
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("prop41");

    let mut limits = Vec::with_capacity(initials.len());
    for initial in initials {
        let mut run_cfg = config.clone();
        run_cfg.dt = run_cfg.dt.min(0.9 / decay);
        let traj = simulate_scalar(initial, diffusivity, convection, source, decay, &run_cfg)?;
        limits.push(traj.final_field().clone());
    }
    let mut pairwise = 0.0f64;
    for a in 0..limits.len() {
        for b in a + 1..limits.len() {
            pairwise = pairwise.max(sup_diff(&limits[a], &limits[b]));
        }
    }
    let direct = steady_state_scalar(diffusivity, convection, source, decay, &config.grid)?;
    let vs_direct = limits
        .iter()
        .map(|l| sup_diff(l, &direct))
        .fold(0.0f64, f64::max);
    let min_limit = limits.iter().map(|l| min_value(l)).fold(f64::INFINITY, f64::min);

    report.metric("pairwise_max", pairwise);
    report.metric("vs_direct_max", vs_direct);
    report.metric("min_limit", min_limit);

    let mut pass = pairwise < 1e-6 && vs_direct < 1e-8 && min_limit > 0.0;
    let source_constant = source.iter().all(|&v| v == source[0]);
    if convection == 0.0 && source_constant {
        let closed = source[0] / decay;
        let err = limits
            .iter()
            .map(|l| l.iter().fold(0.0f64, |m, &v| m.max((v - closed).abs())))
            .fold(0.0f64, f64::max);
        report.metric("closed_form_err", err);
        pass = pass && err < 1e-8;
    }
    report.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Total-host comparison: `V = S + I + R` from the coupled run must equal
/// the standalone scalar run with source `b` and decay `d` snapshot by
/// snapshot, must stay inside the exponential envelope toward `b/d`, and
/// the fitted decay rate must sit within 5% of `d`.
pub fn experiment_population_law(
    params: &Parameters,
    initial: &State,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("population_law");
    report.params = Some(*params);
    params.validate()?;
    if !params.equal_host_diffusion() {
        report
            .notes
            .push("precondition D1 = D2 = D3 violated".to_string());
        report.runtime_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    // Identical time grids for the two runs: no early stopping.
    let mut run_cfg = config_for_run(config, params, initial);
    run_cfg.steady_tol = 0.0;
    let traj = simulate(initial, params, &run_cfg)?;

    let n = config.grid.n_cells();
    let v0: Field = (0..n)
        .map(|c| initial.s[c] + initial.i[c] + initial.r[c])
        .collect();
    let source = config.grid.constant(params.b);
    let scalar = simulate_scalar(&v0, params.d1, 0.0, &source, params.d, &run_cfg)?;

    let mut coupling_err = 0.0f64;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let w = &scalar.snapshots[k];
        for (c, &wc) in w.iter().enumerate() {
            let v = snap.s[c] + snap.i[c] + snap.r[c];
            coupling_err = coupling_err.max((v - wc).abs());
        }
    }
    report.metric("coupled_vs_scalar_max", coupling_err);

    let m_star = params.m_star();
    let v0_dist = v0.iter().fold(0.0f64, |m, &v| m.max((v - m_star).abs()));
    let t_last = *traj.times.last().unwrap();
    let mut envelope_ok = true;
    let mut fit_points = Vec::new();
    for (k, &t) in traj.times.iter().enumerate() {
        let dist = traj.norms[k].v_dist;
        if dist > v0_dist * (-params.d * t).exp() * (1.0 + 1e-8) {
            envelope_ok = false;
        }
        // Fit on the late portion: the non-constant modes decay at
        // d + D k² π² and would steepen an early-time slope.
        if t >= 0.25 * t_last && dist > v0_dist * 1e-9 && dist > 1e-13 {
            fit_points.push((t, dist.ln()));
        }
    }
    report.metric("v0_dist", v0_dist);
    report.metric("envelope_ok", if envelope_ok { 1.0 } else { 0.0 });

    let fit_ok = if v0_dist < 1e-13 {
        report
            .notes
            .push("host total starts at equilibrium; decay-rate fit skipped".to_string());
        true
    } else if fit_points.len() < 3 {
        report
            .notes
            .push("too few snapshots above the noise floor for a decay-rate fit".to_string());
        false
    } else {
        let rate = -least_squares_slope(&fit_points);
        report.metric("fitted_decay_rate", rate);
        report.metric("fit_rel_error", (rate - params.d).abs() / params.d);
        (rate - params.d).abs() <= 0.05 * params.d
    };

    let pass = coupling_err <= 1e-10 && envelope_ok && fit_ok;
    report.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Evaluate the a-priori sup-norm bound for horizon `sigma` and the given
/// initial data.
pub fn appendix_bound_formula(params: &Parameters, initial: &State, sigma: f64) -> f64 {
    let hosts =
        sup_norm(&initial.s) + sup_norm(&initial.i) + sup_norm(&initial.r) + params.b * sigma;
    let growth = (sigma * params.g).exp();
    3.0 * hosts * (1.0 + growth * params.xi * sigma) + sup_norm(&initial.b) * growth
}

/// The running max of the summed sup norms over `[0, horizon]` must respect
/// the closed-form a-priori bound.
pub fn experiment_appendix_bound(
    params: &Parameters,
    initial: &State,
    horizon: f64,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("appendix_bound");
    report.params = Some(*params);
    params.validate()?;

    let mut run_cfg = config_for_run(config, params, initial);
    run_cfg.t_end = horizon;
    run_cfg.dt = run_cfg.dt.min(horizon);
    run_cfg.snapshot_every = 1;
    run_cfg.steady_tol = 0.0;
    let traj = simulate(initial, params, &run_cfg)?;
    let running_max = traj
        .snapshots
        .iter()
        .map(|s| s.total_sup_norm())
        .fold(0.0f64, f64::max);
    let bound = appendix_bound_formula(params, initial, horizon);
    report.metric("running_max", running_max);
    report.metric("bound", bound);
    report.metric("margin", bound - running_max);
    report.verdict = if running_max <= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Scale the new-infection block `(beta1, beta2, xi, g)` so the spatial
/// reproduction number hits `target`. The block scales the spectral radius
/// exactly; when the scaled `g` would break `g < delta`, `g` is pinned to
/// half of `delta` and the remaining rates are bisected instead. Returns
/// the preset and its achieved `r0_pde`.
pub fn preset_with_r0(
    base: &Parameters,
    target: f64,
    grid: &Grid,
) -> Result<(Parameters, f64)> {
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "target_r0",
            value: target,
        });
    }
    base.validate()?;
    let base_report = r0_pde(grid, base, DEFAULT_EIGEN_TOL)?;
    if !base_report.converged {
        return Err(Error::NoConvergence {
            iterations: base_report.iterations,
            residual: base_report.residual,
        });
    }
    let c = target / base_report.value;
    let mut p = *base;
    if c * base.g < 0.85 * base.delta {
        p.beta1 *= c;
        p.beta2 *= c;
        p.xi *= c;
        p.g *= c;
        let achieved = r0_pde(grid, &p, DEFAULT_EIGEN_TOL)?;
        return Ok((p, achieved.value));
    }
    // Pin g below delta and bisect the remaining scale; r0 is strictly
    // increasing in it.
    p.g = 0.5 * base.delta;
    let eval = |scale: f64| -> Result<f64> {
        let mut q = p;
        q.beta1 = base.beta1 * scale;
        q.beta2 = base.beta2 * scale;
        q.xi = base.xi * scale;
        let rep = r0_pde(grid, &q, DEFAULT_EIGEN_TOL)?;
        Ok(rep.value)
    };
    let mut lo = 1e-6;
    let mut hi = 1.0;
    while eval(hi)? < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-13 {
            break;
        }
    }
    let scale = 0.5 * (lo + hi);
    p.beta1 = base.beta1 * scale;
    p.beta2 = base.beta2 * scale;
    p.xi = base.xi * scale;
    let achieved = r0_pde(grid, &p, DEFAULT_EIGEN_TOL)?;
    Ok((p, achieved.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOutcome {
    Extinct,
    Persistent,
    Indeterminate,
    Error,
}

impl std::fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepOutcome::Extinct => write!(f, "extinct"),
            SweepOutcome::Persistent => write!(f, "persistent"),
            SweepOutcome::Indeterminate => write!(f, "indeterminate"),
            SweepOutcome::Error => write!(f, "error"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sample: usize,
    pub params: Parameters,
    pub r0_ode: f64,
    pub r0_pde: f64,
    pub s_theta: f64,
    pub consistency: Consistency,
    pub outcome: SweepOutcome,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub seed: u64,
}

/// Default multiplicative sampling ranges around a base preset, straddling
/// the threshold in both directions while keeping `g < delta` and the host
/// diffusivities tied together.
pub fn default_sweep_ranges(base: &Parameters) -> BTreeMap<String, (f64, f64)> {
    let mut m = BTreeMap::new();
    m.insert("beta1".to_string(), (0.05, 3.0));
    m.insert("beta2".to_string(), (0.05, 3.0));
    m.insert("xi".to_string(), (0.2, 2.0));
    m.insert("g".to_string(), (0.05 * base.delta, 0.8 * base.delta));
    m.insert("U".to_string(), (0.05, 1.0));
    // Keep the disease-free host density b/d well above the persistent
    // classification level so supercritical samples sit clear of the
    // indeterminate band.
    m.insert("b".to_string(), (0.8, 2.0));
    m.insert("d".to_string(), (0.5, 1.25));
    m.insert("D1".to_string(), (0.2, 2.0));
    m
}

fn apply_range_sample(
    base: &Parameters,
    ranges: &BTreeMap<String, (f64, f64)>,
    rng: &mut ChaCha8Rng,
) -> Result<Parameters> {
    let mut p = *base;
    let mut d2_ranged = false;
    let mut d3_ranged = false;
    for (key, &(lo, hi)) in ranges {
        if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi < lo {
            return Err(Error::NonpositiveParameter {
                name: "sweep_range",
                value: lo,
            });
        }
        // Log-uniform draw keeps samples positive and spreads decades evenly.
        let v = lo * (hi / lo).powf(rng.random::<f64>());
        match key.as_str() {
            "b" => p.b = v,
            "d" => p.d = v,
            "gamma" => p.gamma = v,
            "sigma" => p.sigma = v,
            "delta" => p.delta = v,
            "xi" => p.xi = v,
            "beta1" => p.beta1 = v,
            "beta2" => p.beta2 = v,
            "K" => p.k = v,
            "U" => p.u = v,
            "K_B" => p.k_b = v,
            "g" => p.g = v,
            "D1" => p.d1 = v,
            "D2" => {
                p.d2 = v;
                d2_ranged = true;
            }
            "D3" => {
                p.d3 = v;
                d3_ranged = true;
            }
            "D4" => p.d4 = v,
            other => {
                return Err(Error::ConfigParse {
                    path: "sweep ranges".to_string(),
                    line: 0,
                    msg: format!("unknown parameter '{other}'"),
                })
            }
        }
    }
    // Host diffusivities move together unless ranged separately.
    if !d2_ranged {
        p.d2 = p.d1;
    }
    if !d3_ranged {
        p.d3 = p.d1;
    }
    Ok(p)
}

fn sweep_sample(
    base: &Parameters,
    ranges: &BTreeMap<String, (f64, f64)>,
    grid: &Grid,
    config: &SolverConfig,
    seed: u64,
    sample: usize,
) -> SweepRow {
    let mut row = SweepRow {
        sample,
        params: *base,
        r0_ode: f64::NAN,
        r0_pde: f64::NAN,
        s_theta: f64::NAN,
        consistency: Consistency::Indeterminate,
        outcome: SweepOutcome::Error,
        error: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(sample as u64 + 1)));
    let attempt = (|| -> Result<()> {
        let params = apply_range_sample(base, ranges, &mut rng)?;
        params.validate()?;
        row.params = params;
        row.r0_ode = crate::spectral::r0_ode(&params);
        let sc = sign_consistency(grid, &params, DEFAULT_EIGEN_TOL)?;
        row.r0_pde = sc.r0;
        row.s_theta = sc.s_theta;
        row.consistency = sc.verdict;

        let initial = perturbed_dfe(&params, grid, rng.random::<u64>(), 0.5)?;
        let mut run_cfg = config_for_run(config, &params, &initial);
        run_cfg.grid = grid.clone();
        let traj = simulate(&initial, &params, &run_cfg)?;
        let terminal = traj.final_state();
        let level = sup_norm(&terminal.i) + sup_norm(&terminal.b);
        row.outcome = if level < SWEEP_EXTINCT_LEVEL {
            SweepOutcome::Extinct
        } else if level > SWEEP_PERSISTENT_LEVEL {
            SweepOutcome::Persistent
        } else {
            SweepOutcome::Indeterminate
        };
        Ok(())
    })();
    if let Err(e) = attempt {
        row.outcome = SweepOutcome::Error;
        row.error = Some(e.to_string());
    }
    row
}

/// Sample parameter sets from the ranges, record the spectral quantities
/// and the observed long-run outcome per sample. Per-sample failures are
/// recorded in the row, never abort the sweep. Deterministic for a given
/// seed, independent of the worker count.
pub fn sweep_threshold(
    base: &Parameters,
    ranges: &BTreeMap<String, (f64, f64)>,
    n_samples: usize,
    grid: &Grid,
    config: &SolverConfig,
    seed: u64,
    workers: usize,
) -> SweepTable {
    let workers = workers.max(1);
    let mut rows: Vec<Option<SweepRow>> = vec![None; n_samples];
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> = (0..workers)
            .map(|w| (w..n_samples).step_by(workers).collect())
            .collect();
        let mut handles = Vec::new();
        for chunk in chunks {
            handles.push(scope.spawn(move || {
                chunk
                    .into_iter()
                    .map(|k| (k, sweep_sample(base, ranges, grid, config, seed, k)))
                    .collect::<Vec<_>>()
            }));
        }
        for handle in handles {
            for (k, row) in handle.join().expect("sweep worker panicked") {
                rows[k] = Some(row);
            }
        }
    });
    SweepTable {
        rows: rows.into_iter().map(|r| r.expect("all samples filled")).collect(),
        seed,
    }
}
