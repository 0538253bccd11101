//! Plain-text config parsing and all file emission.
//!
//! One grammar serves configs, presets and run metadata: `key = value`
//! lines, `#` comments, UTF-8, LF or CRLF. Unknown and duplicate keys are
//! errors with line numbers so typos surface immediately. Floats are
//! printed with 17 significant digits everywhere, which round-trips `f64`
//! exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{Parameters, State};
use crate::solver::{SolverConfig, Trajectory, DEFAULT_SNAPSHOT_EVERY, DEFAULT_STEADY_TOL};
use crate::verify::{perturbed_dfe, ExperimentReport, SweepTable};

pub const DEFAULT_GRID_CELLS: usize = 128;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SWEEP_SAMPLES: usize = 24;
pub const DEFAULT_INITIAL_AMPLITUDE: f64 = 0.1;
/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "SIRSB_OUT";

const PARAM_KEYS: [&str; 16] = [
    "b", "d", "gamma", "sigma", "delta", "xi", "beta1", "beta2", "K", "U", "K_B", "g", "D1",
    "D2", "D3", "D4",
];

const RUN_KEYS: [&str; 15] = [
    "grid_cells",
    "dt",
    "t_end",
    "snapshot_every",
    "steady_tol",
    "seed",
    "out_dir",
    "initial",
    "initial_amplitude",
    "initial_s",
    "initial_i",
    "initial_r",
    "initial_b",
    "initial_file",
    "sweep_samples",
];

/// How the initial state is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Disease-free equilibrium with a seeded random kick of the given
    /// relative amplitude.
    DfePerturbed { amplitude: f64 },
    /// Spatially constant fields.
    Constant { s: f64, i: f64, r: f64, b: f64 },
    /// Single-snapshot CSV (`x,S,I,R,B`), e.g. a `final_state.csv` from an
    /// earlier run.
    File { path: PathBuf },
}

/// A parsed run configuration plus any hypothesis warnings from parameter
/// validation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub parameters: Parameters,
    pub grid_cells: usize,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub steady_tol: f64,
    pub seed: u64,
    pub initial: InitialSpec,
    pub out_dir: Option<PathBuf>,
    pub sweep_samples: usize,
    pub warnings: Vec<String>,
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::ConfigParse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(path: &str, line: usize, key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("value '{raw}' for key '{key}' is not a number")))
}

fn parse_usize(path: &str, line: usize, key: &str, raw: &str) -> Result<usize> {
    raw.parse::<usize>().map_err(|_| {
        parse_err(
            path,
            line,
            format!("value '{raw}' for key '{key}' is not a nonnegative integer"),
        )
    })
}

/// Parse the `key = value` grammar into an ordered key → (line, value) map,
/// rejecting unknown and duplicate keys.
fn parse_pairs(text: &str, path: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(parse_err(path, line_no, "expected 'key = value'"));
        };
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(path, line_no, "expected 'key = value'"));
        }
        if !PARAM_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
            return Err(parse_err(path, line_no, format!("unknown key '{key}'")));
        }
        if let Some((first, _)) = pairs.get(key) {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate key '{key}' (first set at line {first})"),
            ));
        }
        pairs.insert(key.to_string(), (line_no, value.to_string()));
    }
    Ok(pairs)
}

/// Parse a full run configuration. All sixteen model parameters and `t_end`
/// are required; everything else has documented defaults.
pub fn parse_run_config(text: &str, path: &str) -> Result<RunConfig> {
    let mut pairs = parse_pairs(text, path)?;
    let mut take_f64 = |key: &str| -> Result<Option<f64>> {
        match pairs.remove(key) {
            Some((line, raw)) => Ok(Some(parse_f64(path, line, key, &raw)?)),
            None => Ok(None),
        }
    };

    let mut param_values = [0.0f64; 16];
    let mut missing = Vec::new();
    for (slot, key) in PARAM_KEYS.iter().enumerate() {
        match take_f64(key)? {
            Some(v) => param_values[slot] = v,
            None => missing.push(*key),
        }
    }
    let t_end = take_f64("t_end")?;
    if t_end.is_none() {
        missing.push("t_end");
    }
    if !missing.is_empty() {
        return Err(Error::ConfigMissingKey {
            path: path.to_string(),
            key: missing.join(", "),
        });
    }
    let parameters = Parameters {
        b: param_values[0],
        d: param_values[1],
        gamma: param_values[2],
        sigma: param_values[3],
        delta: param_values[4],
        xi: param_values[5],
        beta1: param_values[6],
        beta2: param_values[7],
        k: param_values[8],
        u: param_values[9],
        k_b: param_values[10],
        g: param_values[11],
        d1: param_values[12],
        d2: param_values[13],
        d3: param_values[14],
        d4: param_values[15],
    };
    let warnings = parameters.validate()?;

    let dt = take_f64("dt")?;
    let steady_tol = take_f64("steady_tol")?.unwrap_or(DEFAULT_STEADY_TOL);
    let grid_cells = match pairs.remove("grid_cells") {
        Some((line, raw)) => parse_usize(path, line, "grid_cells", &raw)?,
        None => DEFAULT_GRID_CELLS,
    };
    let snapshot_every = match pairs.remove("snapshot_every") {
        Some((line, raw)) => parse_usize(path, line, "snapshot_every", &raw)?.max(1),
        None => DEFAULT_SNAPSHOT_EVERY,
    };
    let seed = match pairs.remove("seed") {
        Some((line, raw)) => raw.parse::<u64>().map_err(|_| {
            parse_err(path, line, format!("value '{raw}' for key 'seed' is not a u64"))
        })?,
        None => DEFAULT_SEED,
    };
    let sweep_samples = match pairs.remove("sweep_samples") {
        Some((line, raw)) => parse_usize(path, line, "sweep_samples", &raw)?,
        None => DEFAULT_SWEEP_SAMPLES,
    };
    let out_dir = pairs.remove("out_dir").map(|(_, raw)| PathBuf::from(raw));

    let initial_kind = pairs
        .remove("initial")
        .unwrap_or((0, "dfe_perturbed".to_string()));
    let mut take_for = |key: &str, wanted: &str, kind: &str, line: usize| -> Result<Option<(usize, String)>> {
        match pairs.remove(key) {
            Some(entry) => {
                if kind == wanted {
                    Ok(Some(entry))
                } else {
                    Err(parse_err(
                        path,
                        entry.0,
                        format!("key '{key}' requires initial = {wanted} (initial is '{kind}' at line {line})"),
                    ))
                }
            }
            None => Ok(None),
        }
    };
    let (init_line, kind) = (&initial_kind.0, initial_kind.1.as_str());
    let amplitude = take_for("initial_amplitude", "dfe_perturbed", kind, *init_line)?;
    let const_s = take_for("initial_s", "constant", kind, *init_line)?;
    let const_i = take_for("initial_i", "constant", kind, *init_line)?;
    let const_r = take_for("initial_r", "constant", kind, *init_line)?;
    let const_b = take_for("initial_b", "constant", kind, *init_line)?;
    let file = take_for("initial_file", "file", kind, *init_line)?;

    let initial = match kind {
        "dfe_perturbed" => InitialSpec::DfePerturbed {
            amplitude: match amplitude {
                Some((line, raw)) => parse_f64(path, line, "initial_amplitude", &raw)?,
                None => DEFAULT_INITIAL_AMPLITUDE,
            },
        },
        "constant" => {
            let get = |name: &str, entry: Option<(usize, String)>| -> Result<f64> {
                match entry {
                    Some((line, raw)) => parse_f64(path, line, name, &raw),
                    None => Err(Error::ConfigMissingKey {
                        path: path.to_string(),
                        key: name.to_string(),
                    }),
                }
            };
            InitialSpec::Constant {
                s: get("initial_s", const_s)?,
                i: get("initial_i", const_i)?,
                r: get("initial_r", const_r)?,
                b: get("initial_b", const_b)?,
            }
        }
        "file" => InitialSpec::File {
            path: match file {
                Some((_, raw)) => PathBuf::from(raw),
                None => {
                    return Err(Error::ConfigMissingKey {
                        path: path.to_string(),
                        key: "initial_file".to_string(),
                    })
                }
            },
        },
        other => {
            return Err(parse_err(
                path,
                *init_line,
                format!("initial must be dfe_perturbed, constant or file; got '{other}'"),
            ))
        }
    };

    Ok(RunConfig {
        parameters,
        grid_cells,
        dt,
        t_end: t_end.expect("presence checked above"),
        snapshot_every,
        steady_tol,
        seed,
        initial,
        out_dir,
        sweep_samples,
        warnings,
    })
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_cells)
    }

    /// Materialize the initial state on the grid.
    pub fn initial_state(&self, grid: &Grid) -> Result<State> {
        match &self.initial {
            InitialSpec::DfePerturbed { amplitude } => {
                perturbed_dfe(&self.parameters, grid, self.seed, *amplitude)
            }
            InitialSpec::Constant { s, i, r, b } => State::new(
                grid,
                grid.constant(*s),
                grid.constant(*i),
                grid.constant(*r),
                grid.constant(*b),
                0.0,
            ),
            InitialSpec::File { path } => read_state_csv(path, grid),
        }
    }

    /// Resolve the solver settings; `dt` is chosen from the reaction bound
    /// when the config leaves it out.
    pub fn solver_config(&self, grid: &Grid, initial: &State) -> Result<SolverConfig> {
        let dt = match self.dt {
            Some(dt) => dt,
            None => crate::solver::auto_dt(&self.parameters, initial).min(self.t_end),
        };
        let mut c = SolverConfig::new(grid.clone(), dt, self.t_end)?;
        c.snapshot_every = self.snapshot_every;
        c.steady_tol = self.steady_tol;
        Ok(c)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Serialize a run configuration back into the config grammar (the basis of
/// the metadata file). `dt` must already be resolved.
pub fn render_run_config(config: &RunConfig, resolved_dt: f64, extras: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# run metadata; parseable as a config file");
    for (key, value) in extras {
        let _ = writeln!(out, "# {key} = {value}");
    }
    for (key, value) in config.parameters.named_values() {
        let _ = writeln!(out, "{key} = {}", fmt_f64(value));
    }
    let _ = writeln!(out, "grid_cells = {}", config.grid_cells);
    let _ = writeln!(out, "dt = {}", fmt_f64(resolved_dt));
    let _ = writeln!(out, "t_end = {}", fmt_f64(config.t_end));
    let _ = writeln!(out, "snapshot_every = {}", config.snapshot_every);
    let _ = writeln!(out, "steady_tol = {}", fmt_f64(config.steady_tol));
    let _ = writeln!(out, "seed = {}", config.seed);
    let _ = writeln!(out, "sweep_samples = {}", config.sweep_samples);
    match &config.initial {
        InitialSpec::DfePerturbed { amplitude } => {
            let _ = writeln!(out, "initial = dfe_perturbed");
            let _ = writeln!(out, "initial_amplitude = {}", fmt_f64(*amplitude));
        }
        InitialSpec::Constant { s, i, r, b } => {
            let _ = writeln!(out, "initial = constant");
            let _ = writeln!(out, "initial_s = {}", fmt_f64(*s));
            let _ = writeln!(out, "initial_i = {}", fmt_f64(*i));
            let _ = writeln!(out, "initial_r = {}", fmt_f64(*r));
            let _ = writeln!(out, "initial_b = {}", fmt_f64(*b));
        }
        InitialSpec::File { path } => {
            let _ = writeln!(out, "initial = file");
            let _ = writeln!(out, "initial_file = {}", path.display());
        }
    }
    out
}

/// Long-format trajectory CSV: one row per (snapshot, cell).
pub fn render_trajectory_csv(traj: &Trajectory, grid: &Grid) -> String {
    let mut out = String::from("t,x,S,I,R,B\n");
    for (k, state) in traj.snapshots.iter().enumerate() {
        let t = traj.times[k];
        for c in 0..grid.n_cells() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(t),
                fmt_f64(grid.centers()[c]),
                fmt_f64(state.s[c]),
                fmt_f64(state.i[c]),
                fmt_f64(state.r[c]),
                fmt_f64(state.b[c]),
            );
        }
    }
    out
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, grid: &Grid) -> Result<()> {
    write_text(path, &render_trajectory_csv(traj, grid))
}

/// Parse a trajectory CSV back into snapshot times and states. The cell
/// count is inferred from the first snapshot block.
pub fn parse_trajectory_csv(text: &str, path: &str) -> Result<(Vec<f64>, Vec<State>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == "t,x,S,I,R,B" => {}
        _ => return Err(parse_err(path, 1, "expected header 't,x,S,I,R,B'")),
    }
    let mut rows: Vec<(f64, [f64; 4])> = Vec::new();
    let mut times_raw: Vec<f64> = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(parse_err(path, idx + 1, "expected 6 comma-separated columns"));
        }
        let mut vals = [0.0f64; 6];
        for (j, col) in cols.iter().enumerate() {
            vals[j] = col
                .parse::<f64>()
                .map_err(|_| parse_err(path, idx + 1, format!("column {} is not a number", j + 1)))?;
        }
        times_raw.push(vals[0]);
        rows.push((vals[0], [vals[2], vals[3], vals[4], vals[5]]));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let t0 = times_raw[0];
    let n = times_raw.iter().take_while(|&&t| t == t0).count();
    if !rows.len().is_multiple_of(n) {
        return Err(parse_err(path, 1, "row count is not a multiple of the cell count"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for chunk in rows.chunks(n) {
        let t = chunk[0].0;
        if chunk.iter().any(|&(tc, _)| tc != t) {
            return Err(parse_err(path, 1, "inconsistent snapshot block"));
        }
        times.push(t);
        states.push(State {
            s: chunk.iter().map(|r| r.1[0]).collect(),
            i: chunk.iter().map(|r| r.1[1]).collect(),
            r: chunk.iter().map(|r| r.1[2]).collect(),
            b: chunk.iter().map(|r| r.1[3]).collect(),
            time: t,
        });
    }
    Ok((times, states))
}

/// Single-snapshot state CSV: `x,S,I,R,B`, one row per cell.
pub fn render_state_csv(state: &State, grid: &Grid) -> String {
    let mut out = String::from("x,S,I,R,B\n");
    for c in 0..grid.n_cells() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(grid.centers()[c]),
            fmt_f64(state.s[c]),
            fmt_f64(state.i[c]),
            fmt_f64(state.r[c]),
            fmt_f64(state.b[c]),
        );
    }
    out
}

pub fn write_state_csv(path: &Path, state: &State, grid: &Grid) -> Result<()> {
    write_text(path, &render_state_csv(state, grid))
}

pub fn read_state_csv(path: &Path, grid: &Grid) -> Result<State> {
    let text = std::fs::read_to_string(path)?;
    let label = path.display().to_string();
    let mut s = Vec::new();
    let mut i = Vec::new();
    let mut r = Vec::new();
    let mut b = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == "x,S,I,R,B" => {}
        _ => return Err(parse_err(&label, 1, "expected header 'x,S,I,R,B'")),
    }
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(parse_err(&label, idx + 1, "expected 5 comma-separated columns"));
        }
        let mut vals = [0.0f64; 5];
        for (j, col) in cols.iter().enumerate() {
            vals[j] = col.parse::<f64>().map_err(|_| {
                parse_err(&label, idx + 1, format!("column {} is not a number", j + 1))
            })?;
        }
        s.push(vals[1]);
        i.push(vals[2]);
        r.push(vals[3]);
        b.push(vals[4]);
    }
    State::new(grid, s, i, r, b, 0.0)
}

/// Sweep table CSV with the fixed header `sample,r0_ode,r0_pde,s_theta,outcome`.
pub fn render_sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("sample,r0_ode,r0_pde,s_theta,outcome\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.sample,
            fmt_f64(row.r0_ode),
            fmt_f64(row.r0_pde),
            fmt_f64(row.s_theta),
            row.outcome,
        );
    }
    out
}

pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> Result<()> {
    write_text(path, &render_sweep_csv(table))
}

/// Experiment report as `key = value` text.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# experiment report");
    let _ = writeln!(out, "# name = {}", report.name);
    let _ = writeln!(out, "# verdict = {}", report.verdict);
    if let Some(r0) = report.r0 {
        let _ = writeln!(out, "# r0_pde = {}", fmt_f64(r0));
    }
    let _ = writeln!(out, "# runtime_secs = {:.3}", report.runtime_secs);
    for note in &report.notes {
        let _ = writeln!(out, "# note: {note}");
    }
    for (key, value) in &report.metrics {
        let _ = writeln!(out, "# metric {key} = {}", fmt_f64(*value));
    }
    if let Some(p) = &report.params {
        for (key, value) in p.named_values() {
            let _ = writeln!(out, "{key} = {}", fmt_f64(value));
        }
    }
    out
}

pub fn write_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_text(path, &render_report(report))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Output directory precedence: command-line flag, then config key, then
/// the `SIRSB_OUT` environment variable, then `./sirsb_out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: Option<PathBuf>) -> PathBuf {
    flag.or(config)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sirsb_out"))
}
