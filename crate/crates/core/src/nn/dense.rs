use crate::nn::{NnError, Result};
use crate::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Elementwise activation of a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, x: Array2<T>) -> Array2<T> {
        match self {
            Activation::Tanh => x.mapv_into(|v| v.tanh()),
            Activation::Identity => x,
        }
    }
}

/// A fully connected layer `y = act(W x + b)` with `W` of shape `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayerParams<T> {
    pub fn zeros(out: usize, input: usize, activation: Activation) -> Self {
        Self { w: Array2::zeros((out, input)), b: Array1::zeros(out), activation }
    }

    pub fn glorot<R: Rng>(out: usize, input: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (input + out) as f64).sqrt();
        let dist = Uniform::new(T::of(-limit), T::of(limit)).expect("glorot bounds");
        let data: Vec<T> = (0..out * input).map(|_| dist.sample(rng)).collect();
        let w = Array2::from_shape_vec((out, input), data).expect("shape");
        Self { w, b: Array1::zeros(out), activation }
    }

    pub fn output_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.w.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.len() != self.w.nrows() {
            return Err(NnError::Shape("dense bias length differs from row count".into()));
        }
        if !self.w.iter().all(|v| v.is_finite()) || !self.b.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite("dense parameters"));
        }
        Ok(())
    }
}

/// Forward intermediates of one dense layer over flattened timesteps.
#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    pub(crate) input: Array2<T>,
    pub(crate) output: Array2<T>,
}

/// Apply a dense layer to rows of `x` (`n x in`).
pub(crate) fn dense_forward<T: Scalar>(
    x: &Array2<T>,
    params: &DenseLayerParams<T>,
) -> Result<(Array2<T>, DenseCache<T>)> {
    if x.ncols() != params.input_size() {
        return Err(NnError::Shape(format!(
            "dense input dim {} does not match layer input size {}",
            x.ncols(),
            params.input_size()
        )));
    }
    let pre = x.dot(&params.w.t()) + &params.b;
    let out = params.activation.apply(pre);
    let cache = DenseCache { input: x.clone(), output: out.clone() };
    Ok((out, cache))
}

/// Gradients of one dense layer given `d_out` (`n x out`); returns parameter
/// gradients and the gradient w.r.t. the layer input.
pub(crate) fn dense_backward<T: Scalar>(
    params: &DenseLayerParams<T>,
    cache: &DenseCache<T>,
    d_out: ArrayView2<T>,
) -> Result<(DenseLayerParams<T>, Array2<T>)> {
    if d_out.dim() != cache.output.dim() || cache.input.ncols() != params.input_size() {
        return Err(NnError::Cache("output-gradient shape differs from cached forward pass".into()));
    }
    let one = T::one();
    let d_pre = match params.activation {
        Activation::Tanh => &d_out * &cache.output.mapv(|v| one - v * v),
        Activation::Identity => d_out.to_owned(),
    };
    let dw = d_pre.t().dot(&cache.input);
    let db = d_pre.sum_axis(Axis(0));
    let dx = d_pre.dot(&params.w);
    Ok((DenseLayerParams { w: dw, b: db, activation: params.activation }, dx))
}
