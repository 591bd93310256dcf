use thiserror::Error;

use crate::chain::{ChainConfiguration, ModeScanResult};
use crate::trap::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate reference system: {0}")]
    DegenerateReference(String),

    #[error("inconsistent reference frequencies on {axis} axis: fitted rf coefficient is negative (relative size {relative:.3e})")]
    InconsistentReference { axis: Axis, relative: f64 },

    #[error("trap is unstable for {species} along the {axis} axis (omega^2 = {omega_sq:.6e} rad^2/s^2)")]
    UnstableTrap { species: String, axis: Axis, omega_sq: f64 },

    #[error("equilibrium search did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e} N)")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
        last: Box<ChainConfiguration>,
    },

    #[error("normal mode {0} is unstable (omega^2 <= 0)")]
    UnstableMode(usize),

    #[error("ion {ion} escaped to {distance:.3e} m from the trap centre")]
    IonEscape { ion: usize, distance: f64 },

    #[error("model assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("Fock space truncation exceeded: population {population:.3e} in level n_max = {n_max}; increase n_max")]
    Truncation { population: f64, n_max: usize },

    #[error("field scan aborted at point {index}: {source}")]
    ScanAborted {
        index: usize,
        partial: Box<ModeScanResult>,
        source: Box<Error>,
    },

    #[error("no interior minimum found: {0}")]
    NoMinimum(String),

    #[error("no configuration transition found: {0}")]
    NoTransition(String),

    #[error("continuation failed at step {step}: {source}")]
    Continuation { step: usize, source: Box<Error> },

    #[error("all likelihoods vanish for the observed count {0}")]
    ZeroLikelihood(u64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
