//! Command-line driver: simulate runs, print reproduction numbers, run
//! verification experiments, and sweep parameter space.
//!
//! Exit codes: 0 success / experiment pass, 1 experiment fail, 2 usage or
//! config error (including unmet experiment preconditions), 3 numerical
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sirsb_core::solver::simulate;
use sirsb_core::verify::{self, Verdict};
use sirsb_core::{io, Error, Grid, SolverConfig, State};

#[derive(Parser)]
#[command(
    name = "sirsb",
    version,
    about = "SIRS-B epidemic model laboratory: simulation, reproduction numbers, threshold experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration (key = value lines).
    config: PathBuf,
    /// Override the number of grid cells.
    #[arg(long = "grid", value_name = "N")]
    grid: Option<usize>,
    /// Override the final time.
    #[arg(long = "t-end", value_name = "T")]
    t_end: Option<f64>,
    /// Override the time step (chosen from the reaction bound if absent).
    #[arg(long, value_name = "DT")]
    dt: Option<f64>,
    /// Override the random seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Worker threads for the sweep.
    #[arg(long, value_name = "W")]
    workers: Option<usize>,
    /// Output directory (else config `out_dir`, else $SIRSB_OUT, else ./sirsb_out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the four-field system; write trajectory CSV, final state
    /// and run metadata.
    Simulate(RunArgs),
    /// Print the space-free and spatial reproduction numbers, the
    /// principal eigenvalue of the linearized infection operator, and the
    /// sign-consistency verdict.
    R0(RunArgs),
    /// Run a named experiment: extinction, persistence, prop41,
    /// population_law or appendix_bound.
    Verify {
        #[command(flatten)]
        args: RunArgs,
        /// Experiment name.
        experiment: String,
    },
    /// Sample parameter space around the config values, classify long-run
    /// outcomes, and write the sweep table.
    Sweep(RunArgs),
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConfigParse { .. }
        | Error::ConfigMissingKey { .. }
        | Error::NonpositiveParameter { .. }
        | Error::GridTooCoarse { .. }
        | Error::LengthMismatch { .. }
        | Error::TimeStepTooLarge { .. }
        | Error::InvalidDelta0 { .. }
        | Error::NegativeInitial { .. }
        | Error::Io(_) => 2,
        Error::NegativeValue { .. }
        | Error::NonFinite { .. }
        | Error::ZeroPivot(_)
        | Error::NotDiagonallyDominant { .. }
        | Error::NoConvergence { .. }
        | Error::NextGenUndefined(_) => 3,
    }
}

fn load_config(args: &RunArgs) -> Result<io::RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut run = io::parse_run_config(&text, &args.config.display().to_string())?;
    if let Some(n) = args.grid {
        run.grid_cells = n;
    }
    if let Some(t) = args.t_end {
        run.t_end = t;
    }
    if let Some(dt) = args.dt {
        run.dt = Some(dt);
    }
    if let Some(seed) = args.seed {
        run.seed = seed;
    }
    for warning in &run.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(run)
}

fn cmd_simulate(args: &RunArgs) -> Result<u8, Error> {
    let run = load_config(args)?;
    let grid = run.grid()?;
    let initial = run.initial_state(&grid)?;
    let solver = run.solver_config(&grid, &initial)?;
    let traj = simulate(&initial, &run.parameters, &solver)?;

    let out = io::resolve_out_dir(args.out.clone(), run.out_dir.clone());
    io::write_trajectory_csv(&out.join("trajectory.csv"), &traj, &grid)?;
    io::write_state_csv(&out.join("final_state.csv"), traj.final_state(), &grid)?;
    let extras = vec![
        ("command".to_string(), "simulate".to_string()),
        ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    std::fs::write(
        out.join("run.meta"),
        io::render_run_config(&run, solver.dt, &extras),
    )?;

    let last = traj.norms.last().unwrap();
    println!(
        "simulated to t = {} in {} snapshots (dt = {})",
        traj.times.last().unwrap(),
        traj.times.len(),
        solver.dt
    );
    match traj.steady_at {
        Some(t) => println!("steady state detected at t = {t}"),
        None => println!("no steady state within the horizon"),
    }
    println!(
        "final sup norms: S {:.6e}  I {:.6e}  R {:.6e}  B {:.6e}",
        last.sup_s, last.sup_i, last.sup_r, last.sup_b
    );
    println!("wrote {}", out.join("trajectory.csv").display());
    println!("wrote {}", out.join("final_state.csv").display());
    println!("wrote {}", out.join("run.meta").display());
    Ok(0)
}

fn cmd_r0(args: &RunArgs) -> Result<u8, Error> {
    let run = load_config(args)?;
    let grid = run.grid()?;
    let params = &run.parameters;
    let ode = sirsb_core::r0_ode(params);
    let report = sirsb_core::r0_pde(&grid, params, 1e-10)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let sc = sirsb_core::sign_consistency(&grid, params, 1e-10)?;
    println!("r0_ode  = {ode:.17e}");
    println!(
        "r0_pde  = {:.17e}   (n = {}, {} iterations, residual {:.3e})",
        report.value,
        grid.n_cells(),
        report.iterations,
        report.residual
    );
    println!("s_theta = {:.17e}", sc.s_theta);
    let verdict = match sc.verdict {
        sirsb_core::Consistency::Consistent => "consistent (s_theta and r0_pde - 1 share sign)",
        sirsb_core::Consistency::Indeterminate => "indeterminate (|r0_pde - 1| inside dead band)",
        sirsb_core::Consistency::Inconsistent => "INCONSISTENT",
    };
    println!("sign consistency: {verdict}");
    Ok(0)
}

fn base_solver_config(run: &io::RunConfig, grid: &Grid) -> Result<SolverConfig, Error> {
    // Ensemble experiments cap the step from the disease-free state and
    // shrink it per member as needed.
    let dfe = State::dfe(&run.parameters, grid);
    run.solver_config(grid, &dfe)
}

fn cmd_verify(args: &RunArgs, experiment: &str) -> Result<u8, Error> {
    let run = load_config(args)?;
    let grid = run.grid()?;
    let params = run.parameters;
    let report = match experiment {
        "extinction" => {
            let initials = verify::extinction_ensemble(&params, &grid, run.seed);
            let config = base_solver_config(&run, &grid)?;
            verify::experiment_extinction(&params, &initials, &config)?
        }
        "persistence" => {
            let initials = verify::persistence_ensemble(&params, &grid, run.seed);
            let config = base_solver_config(&run, &grid)?;
            verify::experiment_persistence(&params, &initials, &config)?
        }
        "prop41" => {
            // Scalar comparison equation with the bacterial transport
            // constants, recruitment as source and host death as decay.
            let source = grid.constant(params.b);
            let initials = vec![
                grid.constant(0.0),
                grid.constant(2.0 * params.m_star()),
                grid.sample(|x| params.m_star() * (0.2 + x)),
            ];
            let mut config = base_solver_config(&run, &grid)?;
            config.dt = config.dt.min(0.9 / params.d);
            verify::experiment_prop41(params.d4, params.u, &source, params.d, &initials, &config)?
        }
        "population_law" => {
            let initial = run.initial_state(&grid)?;
            let config = run.solver_config(&grid, &initial)?;
            verify::experiment_population_law(&params, &initial, &config)?
        }
        "appendix_bound" => {
            let initial = run.initial_state(&grid)?;
            let config = run.solver_config(&grid, &initial)?;
            verify::experiment_appendix_bound(&params, &initial, run.t_end, &config)?
        }
        other => {
            eprintln!(
                "unknown experiment '{other}'; expected extinction, persistence, prop41, population_law or appendix_bound"
            );
            return Ok(2);
        }
    };

    let out = io::resolve_out_dir(args.out.clone(), run.out_dir.clone());
    let report_path = out.join(format!("report_{}.txt", report.name));
    io::write_report(&report_path, &report)?;
    // The sibling metadata pins everything needed to reproduce the report.
    let resolved_dt = base_solver_config(&run, &grid)?.dt;
    let extras = vec![
        ("command".to_string(), format!("verify {experiment}")),
        ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    std::fs::write(
        out.join(format!("report_{}.meta", report.name)),
        io::render_run_config(&run, resolved_dt, &extras),
    )?;

    println!("experiment {}: {}", report.name, report.verdict);
    if let Some(r0) = report.r0 {
        println!("r0_pde = {r0:.12e}");
    }
    for (key, value) in &report.metrics {
        println!("{key} = {value:.12e}");
    }
    println!("runtime = {:.3} s", report.runtime_secs);
    println!("wrote {}", report_path.display());
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Indeterminate => 2,
    })
}

fn cmd_sweep(args: &RunArgs) -> Result<u8, Error> {
    let run = load_config(args)?;
    let grid = run.grid()?;
    let params = run.parameters;
    let ranges = verify::default_sweep_ranges(&params);
    let config = base_solver_config(&run, &grid)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
    let table = verify::sweep_threshold(
        &params,
        &ranges,
        run.sweep_samples,
        &grid,
        &config,
        run.seed,
        workers,
    );

    let out = io::resolve_out_dir(args.out.clone(), run.out_dir.clone());
    let csv_path = out.join("sweep.csv");
    io::write_sweep_csv(&csv_path, &table)?;

    let mut counts = [0usize; 4];
    for row in &table.rows {
        match row.outcome {
            verify::SweepOutcome::Extinct => counts[0] += 1,
            verify::SweepOutcome::Persistent => counts[1] += 1,
            verify::SweepOutcome::Indeterminate => counts[2] += 1,
            verify::SweepOutcome::Error => counts[3] += 1,
        }
        if let Some(err) = &row.error {
            eprintln!("sample {}: {err}", row.sample);
        }
    }
    println!(
        "{} samples (seed {}): {} extinct, {} persistent, {} indeterminate, {} errors",
        table.rows.len(),
        table.seed,
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    println!("wrote {}", csv_path.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::R0(args) => cmd_r0(args),
        Command::Verify { args, experiment } => cmd_verify(args, experiment),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
