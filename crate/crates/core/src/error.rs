use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

use crate::transfer::EigenPair;

/// Failures surfaced by the numerical routines and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("theory regime required (ell >= 2 and |c - ell| < 1), got ell = {ell}, c = {c}")]
    OutsideTheoryRegime { ell: u32, c: Complex64 },

    #[error("inverse branch solve failed for w = {w}{}: best z = {best}, residual {residual:e}", branch_suffix(.k))]
    NoConvergence {
        w: Complex64,
        k: Option<i64>,
        best: Complex64,
        residual: f64,
    },

    #[error("degenerate branch at z = {z}: |ell - e^z| = {value:e}")]
    DegenerateBranch { z: Complex64, value: f64 },

    #[error("transfer series diverges for t = {t} (requires t > 1)")]
    SeriesDivergence { t: f64 },

    #[error("tail quadrature unresolved at t = {t}: node scale exceeds double range")]
    TailUnresolved { t: f64 },

    #[error("preimage tree exceeded node cap {cap}")]
    BudgetExceeded { cap: u64 },

    #[error("power iteration residual {:e} above tolerance after {} iterations", .pair.residual, .pair.iters)]
    NonConvergence { pair: Box<EigenPair> },

    #[error("pressure shows no sign change for t up to {t_max}")]
    NoSignChange { t_max: f64 },

    #[error("branch {k}: sampled derivative {value:e} below floor {floor:e} at z = {z}")]
    BoundViolated {
        k: i64,
        z: Complex64,
        value: f64,
        floor: f64,
    },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn branch_suffix(k: &Option<i64>) -> String {
    match k {
        Some(k) => format!(" (branch k = {k})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
