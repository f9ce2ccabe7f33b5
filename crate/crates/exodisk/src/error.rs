use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config {path}:{line}: {msg}")]
    ConfigParse { path: PathBuf, line: usize, msg: String },

    #[error("grid: {0}")]
    Grid(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time step {dt:.3e} violates CFL bound, use dt <= {suggested:.3e}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("singular tridiagonal system at row {0}")]
    Singular(usize),

    #[error("incompatible initial data: {0}")]
    Incompatible(String),

    #[error("simulation diverged at t = {t:.6}")]
    Diverged { t: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
