//! Reference physics generators at two fidelity levels: a three-species
//! Lotka-Volterra system integrated with RK2 (fine vs coarse time step), a
//! 1-D FitzHugh-Nagumo membrane model solved on fine vs coarse grids, and a
//! synthetic parametric oscillator with a biased low-fidelity variant.

mod fhn;
mod lotka_volterra;
mod oscillator;

pub use fhn::{fhn_dataset, fhn_probe_trace, FhnConfig, FhnSolver};
pub use lotka_volterra::{integrate_rk2, lv_dataset, lv_rhs, LotkaVolterraConfig, LV_DOMAIN};
pub use oscillator::{
    oscillator_dataset, oscillator_eval, OscillatorConfig, OSCILLATOR_DOMAIN, OSCILLATOR_WINDOW,
};

use thiserror::Error;

/// Errors from the physics generators.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("integration diverged at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

pub type Result<V> = std::result::Result<V, GenError>;
