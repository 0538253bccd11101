//! Crate-wide error type.

/// Errors raised by grid construction, operator assembly, linear solves,
/// time integration, spectral computations, and config parsing.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid needs at least {min} cells, got {got}")]
    GridTooCoarse { min: usize, got: usize },

    #[error("parameter '{name}' must be strictly positive and finite, got {value}")]
    NonpositiveParameter { name: &'static str, value: f64 },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shifted operator is not strictly diagonally dominant at row {row} (margin {margin:.3e}); refuse to solve")]
    NotDiagonallyDominant { row: usize, margin: f64 },

    #[error("zero pivot in tridiagonal elimination at row {0}")]
    ZeroPivot(usize),

    #[error("time step {dt} exceeds the explicit-reaction stability bound {bound:.6e}")]
    TimeStepTooLarge { dt: f64, bound: f64 },

    #[error("negative {field} value {value:.6e} in cell {cell} at t = {time}; the explicit half-step violated the dt bound")]
    NegativeValue {
        field: &'static str,
        cell: usize,
        value: f64,
        time: f64,
    },

    #[error("non-finite {field} value in cell {cell} at t = {time}")]
    NonFinite {
        field: &'static str,
        cell: usize,
        time: f64,
    },

    #[error("initial {field} data has a negative entry {value:.6e} in cell {cell}")]
    NegativeInitial {
        field: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("next-generation operator undefined: transition-block spectral bound estimate {0:.6e} is >= 0")]
    NextGenUndefined(f64),

    #[error("eigenvalue iteration did not converge within {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("delta0 = {delta0} must lie in [0, s_level = {s_level})")]
    InvalidDelta0 { delta0: f64, s_level: f64 },

    #[error("{path}:{line}: {msg}")]
    ConfigParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("missing required key '{key}' in {path}")]
    ConfigMissingKey { path: String, key: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
