//! Fidelity-tagged time-parameter datasets, min-max normalization,
//! subsequence batching into rank-3 tensors, CSV persistence, and the
//! test-MSE metric.

mod batch;
mod csv;
mod dataset;
mod metrics;
mod normalize;

pub use batch::{make_subsequences, window_offsets, Provenance, SequenceBatch};
pub use csv::{dataset_hash, load_csv, save_csv, DATASET_FORMAT};
pub use dataset::{
    build_grid_dataset, linspace, midpoints, Fidelity, PointEvaluator, SequenceEvaluator, TimeGrid,
    TimeParamDataset,
};
pub use metrics::{test_mse, test_mse_sequences};
pub use normalize::{FeatureScale, Normalizer};

use thiserror::Error;

/// Errors from dataset construction, batching, and persistence.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluator failed at mu index {param_index}, t = {time}: {message}")]
    Evaluator { param_index: usize, time: f64, message: String },
    #[error("parse error at {path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<V> = std::result::Result<V, DataError>;
