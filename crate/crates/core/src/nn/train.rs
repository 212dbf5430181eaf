use crate::nn::{
    backward, clip_global_norm, mse_loss, mse_loss_grad, network_forward, NetworkParams, NetworkSpec,
    NnError, OptimizerConfig, OptimizerState, Result,
};
use crate::Scalar;
use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Upper bound on the mini-batch size; clamped to the number of rows.
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Fraction of rows held out for per-epoch validation loss tracking.
    pub validation_fraction: Option<f64>,
    /// Global-norm gradient clip; off by default.
    pub grad_clip_norm: Option<f64>,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, optimizer: OptimizerConfig, seed: u64) -> Self {
        Self { epochs, batch_size, optimizer, seed, validation_fraction: None, grad_clip_norm: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Loss record for one epoch, in the (normalized) units of the targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats<T> {
    pub train_loss: T,
    pub val_loss: Option<T>,
}

/// Initialize from the config seed and train; see [`train_from`].
pub fn train<T: Scalar>(
    spec: &NetworkSpec,
    inputs: &Array3<T>,
    targets: &Array3<T>,
    config: &TrainConfig,
) -> Result<(NetworkParams<T>, Vec<EpochStats<T>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = NetworkParams::init(spec, &mut rng)?;
    train_from(params, spec, inputs, targets, config)
}

/// Run the epoch loop with shuffled mini-batches from the given starting
/// parameters. Deterministic for a fixed config: the seed drives both the
/// shuffling stream and (in [`train`]) the initialization.
pub fn train_from<T: Scalar>(
    mut params: NetworkParams<T>,
    spec: &NetworkSpec,
    inputs: &Array3<T>,
    targets: &Array3<T>,
    config: &TrainConfig,
) -> Result<(NetworkParams<T>, Vec<EpochStats<T>>)> {
    params.matches(spec)?;
    let n_rows = inputs.dim().0;
    if n_rows == 0 {
        return Err(NnError::Shape("empty training set".into()));
    }
    if inputs.dim().0 != targets.dim().0 || inputs.dim().1 != targets.dim().1 {
        return Err(NnError::Shape("input and target row/step counts differ".into()));
    }
    if config.batch_size == 0 {
        return Err(NnError::Config("batch size must be positive".into()));
    }

    // Shuffle stream is separate from the init stream used by `train`.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e3779b97f4a7c15));

    let mut order: Vec<usize> = (0..n_rows).collect();
    let n_val = match config.validation_fraction {
        Some(f) => {
            if !(0.0..1.0).contains(&f) {
                return Err(NnError::Config(format!("validation fraction {f} outside [0, 1)")));
            }
            order.shuffle(&mut rng);
            ((f * n_rows as f64).ceil() as usize).min(n_rows - 1)
        }
        None => 0,
    };
    let (val_idx, train_idx): (Vec<usize>, Vec<usize>) =
        (order[..n_val].to_vec(), order[n_val..].to_vec());
    let batch = config.batch_size.min(train_idx.len());

    let (val_in, val_tg) = if n_val > 0 {
        (Some(inputs.select(Axis(0), &val_idx)), Some(targets.select(Axis(0), &val_idx)))
    } else {
        (None, None)
    };

    let mut opt = OptimizerState::new(config.optimizer, &params)?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order = train_idx;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sq_sum = T::zero();
        let mut entries = 0usize;
        for chunk in order.chunks(batch) {
            let x = inputs.select(Axis(0), chunk);
            let y = targets.select(Axis(0), chunk);
            let (out, cache) = network_forward(spec, &params, &x)?;
            let (loss, d_out) = mse_loss_grad(&out, &y)?;
            if !loss.is_finite() {
                return Err(NnError::Diverged { epoch });
            }
            sq_sum += loss * T::from_usize(out.len()).expect("entry count");
            entries += out.len();
            let mut grads = backward(spec, &params, &cache, &d_out)?;
            if let Some(max) = config.grad_clip_norm {
                clip_global_norm(&mut grads, T::of(max));
            }
            opt.apply(&mut params, &grads)?;
        }
        let train_loss = sq_sum / T::from_usize(entries).expect("entry count");
        let val_loss = match (&val_in, &val_tg) {
            (Some(vx), Some(vy)) => {
                let (out, _) = network_forward(spec, &params, vx)?;
                Some(mse_loss(&out, vy)?)
            }
            _ => None,
        };
        history.push(EpochStats { train_loss, val_loss });
    }
    Ok((params, history))
}
