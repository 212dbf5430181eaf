use crate::nn::{NnError, Result};
use crate::Scalar;
use ndarray::Array3;

/// Mean squared error over all batch, time, and output entries.
pub fn mse_loss<T: Scalar>(pred: &Array3<T>, target: &Array3<T>) -> Result<T> {
    mse_loss_grad(pred, target).map(|(l, _)| l)
}

/// MSE together with its gradient w.r.t. the predictions, `2 (pred - target) / n`.
pub fn mse_loss_grad<T: Scalar>(pred: &Array3<T>, target: &Array3<T>) -> Result<(T, Array3<T>)> {
    if pred.dim() != target.dim() {
        return Err(NnError::Shape(format!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let n = T::from_usize(pred.len()).expect("entry count");
    let diff = pred - target;
    let loss = diff.iter().map(|&d| d * d).fold(T::zero(), |a, b| a + b) / n;
    let grad = diff.mapv_into(|d| T::of(2.0) * d / n);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array3;
    use rand::distr::{Distribution, Uniform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_prediction_is_zero() {
        let a = Array3::from_shape_fn((2, 3, 2), |(b, k, o)| (b + k + o) as f64);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_two_gives_four() {
        let t = Array3::from_shape_fn((2, 4, 3), |(b, k, o)| (b * k * o) as f64);
        let p = &t + 2.0;
        assert_abs_diff_eq!(mse_loss(&p, &t).unwrap(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dist = Uniform::new(-2.0f64, 2.0).unwrap();
        let p = Array3::from_shape_vec((2, 3, 2), (0..12).map(|_| dist.sample(&mut rng)).collect()).unwrap();
        let t = Array3::from_shape_vec((2, 3, 2), (0..12).map(|_| dist.sample(&mut rng)).collect()).unwrap();
        let mut acc = 0.0;
        for b in 0..2 {
            for k in 0..3 {
                for o in 0..2 {
                    let d: f64 = p[[b, k, o]] - t[[b, k, o]];
                    acc += d * d;
                }
            }
        }
        assert_abs_diff_eq!(mse_loss(&p, &t).unwrap(), acc / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = Array3::<f64>::zeros((1, 2, 2));
        let b = Array3::<f64>::zeros((1, 2, 3));
        assert!(matches!(mse_loss(&a, &b), Err(NnError::Shape(_))));
    }
}
