use crate::nn::{NnError, ParamSet, Result};
use crate::Scalar;
use ndarray::Zip;
use serde::{Deserialize, Serialize};

/// Gradient-based update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptAlgorithm {
    Adam,
    Adamax,
}

impl std::fmt::Display for OptAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptAlgorithm::Adam => write!(f, "adam"),
            OptAlgorithm::Adamax => write!(f, "adamax"),
        }
    }
}

impl std::str::FromStr for OptAlgorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptAlgorithm::Adam),
            "adamax" => Ok(OptAlgorithm::Adamax),
            other => Err(format!("unknown optimizer '{other}' (expected adam or adamax)")),
        }
    }
}

/// Optimizer hyperparameters. `beta1`, `beta2`, and `epsilon` default to the
/// common values 0.9, 0.999, and 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: OptAlgorithm,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self { algorithm: OptAlgorithm::Adam, learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn adamax(learning_rate: f64) -> Self {
        Self { algorithm: OptAlgorithm::Adamax, learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn new(algorithm: OptAlgorithm, learning_rate: f64) -> Self {
        match algorithm {
            OptAlgorithm::Adam => Self::adam(learning_rate),
            OptAlgorithm::Adamax => Self::adamax(learning_rate),
        }
    }
}

/// Moment accumulators shaped like the parameter set plus the step counter.
///
/// For Adamax the second accumulator holds the exponentially weighted
/// infinity norm instead of the second moment.
#[derive(Debug, Clone)]
pub struct OptimizerState<T, P> {
    pub config: OptimizerConfig,
    pub step: u64,
    m: P,
    v: P,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar, P: ParamSet<T>> OptimizerState<T, P> {
    pub fn new(config: OptimizerConfig, like: &P) -> Result<Self> {
        if !(config.learning_rate > 0.0) {
            return Err(NnError::Config(format!(
                "learning rate must be positive, got {}",
                config.learning_rate
            )));
        }
        Ok(Self { config, step: 0, m: like.zeroed(), v: like.zeroed(), _marker: std::marker::PhantomData })
    }

    /// Apply one update in place; increments the step counter.
    pub fn apply(&mut self, params: &mut P, grads: &P) -> Result<()> {
        self.step += 1;
        let t = self.step;
        let b1 = T::of(self.config.beta1);
        let b2 = T::of(self.config.beta2);
        let eps = T::of(self.config.epsilon);
        let lr = T::of(self.config.learning_rate);
        let one = T::one();
        let bc1 = one - b1.powi(t as i32);

        let mut pt = params.tensors_mut();
        let gt = grads.tensors();
        let mut mt = self.m.tensors_mut();
        let mut vt = self.v.tensors_mut();
        if pt.len() != gt.len() {
            return Err(NnError::Shape("gradient tensor count differs from parameters".into()));
        }
        match self.config.algorithm {
            OptAlgorithm::Adam => {
                let bc2 = one - b2.powi(t as i32);
                for i in 0..pt.len() {
                    if pt[i].shape() != gt[i].shape() {
                        return Err(NnError::Shape("gradient tensor shape differs from parameters".into()));
                    }
                    Zip::from(&mut pt[i]).and(&gt[i]).and(&mut mt[i]).and(&mut vt[i]).for_each(
                        |p, &g, m, v| {
                            *m = b1 * *m + (one - b1) * g;
                            *v = b2 * *v + (one - b2) * g * g;
                            let m_hat = *m / bc1;
                            let v_hat = *v / bc2;
                            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
                        },
                    );
                }
            }
            OptAlgorithm::Adamax => {
                for i in 0..pt.len() {
                    if pt[i].shape() != gt[i].shape() {
                        return Err(NnError::Shape("gradient tensor shape differs from parameters".into()));
                    }
                    Zip::from(&mut pt[i]).and(&gt[i]).and(&mut mt[i]).and(&mut vt[i]).for_each(
                        |p, &g, m, u| {
                            *m = b1 * *m + (one - b1) * g;
                            *u = (b2 * *u).max(g.abs());
                            *p = *p - lr / bc1 * *m / (*u + eps);
                        },
                    );
                }
            }
        }
        Ok(())
    }
}

/// Scale all gradients so their global L2 norm does not exceed `max_norm`.
pub fn clip_global_norm<T: Scalar, P: ParamSet<T>>(grads: &mut P, max_norm: T) -> T {
    let mut sq = T::zero();
    for t in grads.tensors() {
        sq = t.iter().fold(sq, |a, &v| a + v * v);
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > T::zero() {
        let scale = max_norm / norm;
        for mut t in grads.tensors_mut() {
            t.mapv_inplace(|v| v * scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{NetworkParams, NetworkSpec};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_net(seed: u64) -> (NetworkSpec, NetworkParams<f64>) {
        let spec = NetworkSpec::new(1, 1, vec![2], vec![1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = NetworkParams::init(&spec, &mut rng).unwrap();
        (spec, params)
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let (_, mut params) = small_net(1);
        let before = params.clone();
        let grads = params.zeroed();
        let mut opt = OptimizerState::new(OptimizerConfig::adam(0.01), &params).unwrap();
        opt.apply(&mut params, &grads).unwrap();
        assert_eq!(params, before);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let (_, mut params) = small_net(2);
        let before = params.clone();
        let mut grads = params.zeroed();
        for mut t in grads.tensors_mut() {
            t.fill(0.37);
        }
        let eta = 0.005;
        let mut opt = OptimizerState::new(OptimizerConfig::adam(eta), &params).unwrap();
        opt.apply(&mut params, &grads).unwrap();
        let b = before.tensors();
        let a = params.tensors();
        for i in 0..a.len() {
            for (x, y) in a[i].iter().zip(b[i].iter()) {
                assert_abs_diff_eq!((x - y).abs(), eta, epsilon = eta * 1e-3);
            }
        }
    }

    #[test]
    fn adam_trajectory_matches_scalar_recurrence() {
        // Single scalar parameter followed for five steps against a
        // hand-rolled recurrence.
        #[derive(Clone)]
        struct One(ndarray::Array1<f64>);
        impl ParamSet<f64> for One {
            fn tensors(&self) -> Vec<ndarray::ArrayViewD<'_, f64>> {
                vec![self.0.view().into_dyn()]
            }
            fn tensors_mut(&mut self) -> Vec<ndarray::ArrayViewMutD<'_, f64>> {
                vec![self.0.view_mut().into_dyn()]
            }
        }

        let grads_seq = [0.3, -0.5, 0.1, 0.9, -0.2];
        let (eta, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);

        let mut p = One(ndarray::arr1(&[1.0]));
        let mut opt = OptimizerState::new(OptimizerConfig::adam(eta), &p).unwrap();
        let mut expect = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for (t, &g) in grads_seq.iter().enumerate() {
            opt.apply(&mut p, &One(ndarray::arr1(&[g]))).unwrap();
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32 + 1));
            let vh = v / (1.0 - b2.powi(t as i32 + 1));
            expect -= eta * mh / (vh.sqrt() + eps);
            assert_abs_diff_eq!(p.0[0], expect, epsilon = 1e-12);
        }

        // Same trajectory check for Adamax.
        let mut p = One(ndarray::arr1(&[1.0]));
        let mut opt = OptimizerState::new(OptimizerConfig::adamax(eta), &p).unwrap();
        let mut expect = 1.0;
        let (mut m, mut u) = (0.0, 0.0f64);
        for (t, &g) in grads_seq.iter().enumerate() {
            opt.apply(&mut p, &One(ndarray::arr1(&[g]))).unwrap();
            m = b1 * m + (1.0 - b1) * g;
            u = (b2 * u).max(g.abs());
            expect -= eta / (1.0 - b1.powi(t as i32 + 1)) * m / (u + eps);
            assert_abs_diff_eq!(p.0[0], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_positive_learning_rate_is_configuration_error() {
        let (_, params) = small_net(3);
        assert!(matches!(
            OptimizerState::new(OptimizerConfig::adam(0.0), &params),
            Err(NnError::Config(_))
        ));
        assert!(matches!(
            OptimizerState::new(OptimizerConfig::adamax(-1.0), &params),
            Err(NnError::Config(_))
        ));
    }

    #[test]
    fn clip_rescales_large_gradients() {
        let (_, params) = small_net(4);
        let mut grads = params.zeroed();
        for mut t in grads.tensors_mut() {
            t.fill(1.0);
        }
        let norm = clip_global_norm(&mut grads, 1.0);
        assert!(norm > 1.0);
        let mut sq = 0.0;
        for t in grads.tensors() {
            sq += t.iter().map(|v| v * v).sum::<f64>();
        }
        assert_abs_diff_eq!(sq.sqrt(), 1.0, epsilon = 1e-12);
    }
}
