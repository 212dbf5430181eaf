//! Dense and LSTM layers with hand-derived reverse-mode gradients
//! (backpropagation through time), MSE loss, and the Adam/Adamax optimizers.

mod dense;
mod io;
mod loss;
mod lstm;
mod network;
mod optimizer;
mod train;

pub use dense::{Activation, DenseCache, DenseLayerParams};
pub use io::{network_from_json, network_to_json, NETWORK_FORMAT};
pub(crate) use io::{network_from_doc, network_to_doc, NetworkDoc};
pub use loss::{mse_loss, mse_loss_grad};
pub use lstm::{lstm_cell_forward, lstm_layer_forward, GateCache, LstmCellParams, LstmLayerCache, LstmState};
pub use network::{backward, network_forward, ForwardCache, Network, NetworkParams, NetworkSpec, ParamSet};
pub use optimizer::{clip_global_norm, OptAlgorithm, OptimizerConfig, OptimizerState};
pub use train::{train, train_from, EpochStats, TrainConfig};

use thiserror::Error;

/// Errors from network construction, evaluation, and training.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("forward cache does not match network: {0}")]
    Cache(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
}

pub type Result<V> = std::result::Result<V, NnError>;
