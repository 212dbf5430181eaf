//! Data-driven multi-fidelity surrogate modeling of time-parameter-dependent
//! quantities with LSTM networks.
//!
//! The crate provides, from scratch:
//!
//! - [`nn`]: dense and LSTM layers with exact reverse-mode gradients
//!   (backpropagation through time), MSE loss, and Adam/Adamax optimizers;
//! - [`data`]: fidelity-tagged time-parameter datasets, min-max
//!   normalization, subsequence batching into rank-3 tensors, CSV
//!   persistence, and the test-MSE metric;
//! - [`generators`]: reference physics generators at two fidelity levels
//!   (Lotka-Volterra via RK2, a 1-D FitzHugh-Nagumo solver on fine/coarse
//!   grids, and a synthetic parametric oscillator);
//! - [`mf`]: single-fidelity, 2-step, 3-step, and intermediate surrogate
//!   architectures, series/parallel multi-level extensions, and
//!   ensemble-based uncertainty bounds;
//! - [`hpo`]: cross-validated hyperparameter search (random plus a simple
//!   adaptive refinement);
//! - [`harness`]: the experiment engine behind the `mflstm` CLI, producing
//!   machine-readable report bundles.
//!
//! Numerical kernels are generic over the [`Scalar`] floating-point type;
//! the aliases below fix `f64` as the precision used by the harness.

pub mod data;
pub mod generators;
pub mod harness;
pub mod hpo;
pub mod mf;
pub mod nn;
mod scalar;

pub use scalar::Scalar;

/// Double-precision dataset, as produced by the generators and the CLI.
pub type Dataset = data::TimeParamDataset<f64>;
/// Double-precision rank-3 subsequence batch.
pub type Batch = data::SequenceBatch<f64>;
/// Double-precision network (spec plus parameters).
pub type Network = nn::Network<f64>;
/// Double-precision trained multi-fidelity model.
pub type Model = mf::MfModel<f64>;
