//! Observables, ergodic sums `Φ_n`, the skew product and reverse cocycles.

mod observable;
mod parse;
mod trace;

use thiserror::Error;

use crate::driver::DriverError;

pub use observable::{coboundary_of, coboundary_plus_drift, BinOp, Expr, Observable};
pub use parse::parse_expr;
pub use trace::{Cocycle, CocycleTrace, TraceDirection, DEFAULT_CHECKPOINT_EVERY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("cannot parse observable: {0}")]
    Parse(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("observable {observable} cannot be evaluated on {system}")]
    Incompatible {
        observable: String,
        system: &'static str,
    },
    #[error("observable {0} has no declared bound")]
    Unbounded(String),
    #[error("declared-centered observable has mean {z:.2} standard errors from 0")]
    NotCentered { z: f64 },
    #[error("no checkpoint at n = {n} (grid spacing {every})")]
    MissingCheckpoint { n: usize, every: usize },
    #[error("index {index} out of range for a trace of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Driver(#[from] DriverError),
}
