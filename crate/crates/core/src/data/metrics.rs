use crate::data::{DataError, Result};
use crate::Scalar;
use ndarray::{Array3, ArrayView2};

/// Test-set error: the mean over test points of the squared Euclidean norm
/// of the prediction error, `(1/N) sum_i ||y_i - yhat_i||_2^2`.
///
/// Both arrays are `points x p_out` in physical (denormalized) units. Unlike
/// the training MSE this does not divide by the output dimension.
pub fn test_mse<T: Scalar>(pred: ArrayView2<T>, target: ArrayView2<T>) -> Result<T> {
    if pred.dim() != target.dim() {
        return Err(DataError::Shape(format!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    if pred.nrows() == 0 {
        return Err(DataError::Shape("empty test set".into()));
    }
    let mut acc = T::zero();
    for (p, t) in pred.outer_iter().zip(target.outer_iter()) {
        for (&a, &b) in p.iter().zip(t.iter()) {
            let d = a - b;
            acc += d * d;
        }
    }
    Ok(acc / T::from_usize(pred.nrows()).expect("count"))
}

/// [`test_mse`] over rank-3 blocks, flattening `(instance, time)` into points.
pub fn test_mse_sequences<T: Scalar>(pred: &Array3<T>, target: &Array3<T>) -> Result<T> {
    if pred.dim() != target.dim() {
        return Err(DataError::Shape(format!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let (b, k, p) = pred.dim();
    let pv = pred.view().into_shape_with_order((b * k, p)).expect("standard layout");
    let tv = target.view().into_shape_with_order((b * k, p)).expect("standard layout");
    test_mse(pv, tv)
}
