use crate::nn::dense::{dense_backward, dense_forward, DenseCache};
use crate::nn::lstm::lstm_layer_backward;
use crate::nn::{
    lstm_layer_forward, Activation, DenseLayerParams, LstmCellParams, LstmLayerCache, NnError, Result,
};
use crate::Scalar;
use ndarray::{Array2, Array3, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Architecture of a network: a stack of LSTM layers followed by dense layers
/// applied timestep-wise. The final layer always uses the identity activation;
/// hidden dense layers use `hidden_activation`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub lstm_layers: Vec<usize>,
    pub dense_layers: Vec<usize>,
    pub hidden_activation: Activation,
}

impl NetworkSpec {
    /// A spec whose last dense layer is the readout to `output_dim`.
    pub fn new(input_dim: usize, output_dim: usize, lstm: Vec<usize>, dense: Vec<usize>) -> Self {
        Self {
            input_dim,
            output_dim,
            lstm_layers: lstm,
            dense_layers: dense,
            hidden_activation: Activation::Tanh,
        }
    }

    /// Build a spec from depth/width pairs, appending the linear readout to
    /// `output_dim` as the final dense layer.
    pub fn from_depth_width(
        input_dim: usize,
        output_dim: usize,
        lstm_depth: usize,
        lstm_width: usize,
        dense_depth: usize,
        dense_width: usize,
    ) -> Self {
        let lstm = vec![lstm_width; lstm_depth];
        let mut dense = vec![dense_width; dense_depth];
        dense.push(output_dim);
        Self::new(input_dim, output_dim, lstm, dense)
    }

    /// A purely linear network (dense layers with identity activations only).
    pub fn linear(input_dim: usize, output_dim: usize, hidden: Vec<usize>) -> Self {
        let mut dense = hidden;
        dense.push(output_dim);
        Self {
            input_dim,
            output_dim,
            lstm_layers: Vec::new(),
            dense_layers: dense,
            hidden_activation: Activation::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NnError::Config("input and output dimensions must be positive".into()));
        }
        if self.lstm_layers.iter().chain(self.dense_layers.iter()).any(|&w| w == 0) {
            return Err(NnError::Config("layer widths must be positive".into()));
        }
        match self.dense_layers.last() {
            Some(&last) if last != self.output_dim => Err(NnError::Config(format!(
                "final dense width {} must equal output dim {}",
                last, self.output_dim
            ))),
            None if self.lstm_layers.is_empty() => {
                Err(NnError::Config("network must contain at least one layer".into()))
            }
            None if *self.lstm_layers.last().unwrap() != self.output_dim => Err(NnError::Config(
                format!(
                    "with no dense layers the last LSTM width {} must equal output dim {}",
                    self.lstm_layers.last().unwrap(),
                    self.output_dim
                ),
            )),
            _ => Ok(()),
        }
    }

    /// Input width of LSTM layer `i`.
    fn lstm_input(&self, i: usize) -> usize {
        if i == 0 {
            self.input_dim
        } else {
            self.lstm_layers[i - 1]
        }
    }

    /// Input width of dense layer `i`.
    fn dense_input(&self, i: usize) -> usize {
        if i == 0 {
            *self.lstm_layers.last().unwrap_or(&self.input_dim)
        } else {
            self.dense_layers[i - 1]
        }
    }

    fn dense_activation(&self, i: usize) -> Activation {
        if i + 1 == self.dense_layers.len() {
            Activation::Identity
        } else {
            self.hidden_activation
        }
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for i in 0..self.lstm_layers.len() {
            let h = self.lstm_layers[i];
            n += 4 * (h * (h + self.lstm_input(i)) + h);
        }
        for i in 0..self.dense_layers.len() {
            n += self.dense_layers[i] * (self.dense_input(i) + 1);
        }
        n
    }
}

/// Trainable parameters matching a [`NetworkSpec`]: LSTM cells in order, then
/// dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub lstm: Vec<LstmCellParams<T>>,
    pub dense: Vec<DenseLayerParams<T>>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let lstm = (0..spec.lstm_layers.len())
            .map(|i| LstmCellParams::zeros(spec.lstm_layers[i], spec.lstm_input(i)))
            .collect();
        let dense = (0..spec.dense_layers.len())
            .map(|i| {
                DenseLayerParams::zeros(spec.dense_layers[i], spec.dense_input(i), spec.dense_activation(i))
            })
            .collect();
        Ok(Self { lstm, dense })
    }

    /// Glorot-uniform weights, zero biases, drawn in a fixed layer order.
    pub fn init<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let lstm = (0..spec.lstm_layers.len())
            .map(|i| LstmCellParams::glorot(spec.lstm_layers[i], spec.lstm_input(i), rng))
            .collect();
        let dense = (0..spec.dense_layers.len())
            .map(|i| {
                DenseLayerParams::glorot(spec.dense_layers[i], spec.dense_input(i), spec.dense_activation(i), rng)
            })
            .collect();
        Ok(Self { lstm, dense })
    }

    /// Check that layer counts, shapes, and activations match `spec`.
    pub fn matches(&self, spec: &NetworkSpec) -> Result<()> {
        spec.validate()?;
        if self.lstm.len() != spec.lstm_layers.len() || self.dense.len() != spec.dense_layers.len() {
            return Err(NnError::Config("layer counts do not match spec".into()));
        }
        for (i, cell) in self.lstm.iter().enumerate() {
            cell.validate()?;
            if cell.hidden_size() != spec.lstm_layers[i] || cell.input_size() != spec.lstm_input(i) {
                return Err(NnError::Config(format!("LSTM layer {i} shape does not match spec")));
            }
        }
        for (i, layer) in self.dense.iter().enumerate() {
            layer.validate()?;
            if layer.output_size() != spec.dense_layers[i]
                || layer.input_size() != spec.dense_input(i)
                || layer.activation != spec.dense_activation(i)
            {
                return Err(NnError::Config(format!("dense layer {i} does not match spec")));
            }
        }
        Ok(())
    }
}

/// A spec paired with matching parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub params: NetworkParams<T>,
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: NetworkSpec, params: NetworkParams<T>) -> Result<Self> {
        params.matches(&spec)?;
        Ok(Self { spec, params })
    }

    pub fn forward(&self, inputs: &Array3<T>) -> Result<Array3<T>> {
        network_forward(&self.spec, &self.params, inputs).map(|(y, _)| y)
    }
}

/// Collections of trainable tensors that the optimizer walks uniformly.
pub trait ParamSet<T: Scalar>: Clone + Send {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>>;
    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>>;

    /// A same-shaped collection of zeros.
    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        for mut t in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }
}

impl<T: Scalar> ParamSet<T> for LstmCellParams<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        vec![
            self.w_f.view().into_dyn(),
            self.w_u.view().into_dyn(),
            self.w_o.view().into_dyn(),
            self.w_c.view().into_dyn(),
            self.b_f.view().into_dyn(),
            self.b_u.view().into_dyn(),
            self.b_o.view().into_dyn(),
            self.b_c.view().into_dyn(),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        vec![
            self.w_f.view_mut().into_dyn(),
            self.w_u.view_mut().into_dyn(),
            self.w_o.view_mut().into_dyn(),
            self.w_c.view_mut().into_dyn(),
            self.b_f.view_mut().into_dyn(),
            self.b_u.view_mut().into_dyn(),
            self.b_o.view_mut().into_dyn(),
            self.b_c.view_mut().into_dyn(),
        ]
    }
}

impl<T: Scalar> ParamSet<T> for DenseLayerParams<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        vec![self.w.view().into_dyn(), self.b.view().into_dyn()]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        vec![self.w.view_mut().into_dyn(), self.b.view_mut().into_dyn()]
    }
}

impl<T: Scalar> ParamSet<T> for NetworkParams<T> {
    fn tensors(&self) -> Vec<ArrayViewD<'_, T>> {
        self.lstm
            .iter()
            .flat_map(|l| l.tensors())
            .chain(self.dense.iter().flat_map(|d| d.tensors()))
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        let mut out = Vec::new();
        for l in &mut self.lstm {
            out.extend(l.tensors_mut());
        }
        for d in &mut self.dense {
            out.extend(d.tensors_mut());
        }
        out
    }
}

/// Forward intermediates of a full network pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    lstm: Vec<LstmLayerCache<T>>,
    dense: Vec<DenseCache<T>>,
    batch: usize,
    steps: usize,
}

fn flatten_steps<T: Scalar>(x: Array3<T>) -> Array2<T> {
    let (b, k, f) = x.dim();
    x.into_shape_with_order((b * k, f)).expect("standard layout")
}

fn unflatten_steps<T: Scalar>(x: Array2<T>, batch: usize, steps: usize) -> Array3<T> {
    let f = x.ncols();
    x.into_shape_with_order((batch, steps, f)).expect("standard layout")
}

/// Run the network over a batch of sequences (`batch x steps x input_dim`),
/// returning the output sequence and the caches needed by [`backward`].
pub fn network_forward<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    inputs: &Array3<T>,
) -> Result<(Array3<T>, ForwardCache<T>)> {
    params.matches(spec)?;
    let (batch, steps, in_dim) = inputs.dim();
    if in_dim != spec.input_dim {
        return Err(NnError::Shape(format!(
            "batch input dim {} does not match spec input dim {}",
            in_dim, spec.input_dim
        )));
    }
    if batch == 0 || steps == 0 {
        return Err(NnError::Shape("empty batch".into()));
    }

    let mut seq = inputs.clone();
    let mut lstm_caches = Vec::with_capacity(params.lstm.len());
    for cell in &params.lstm {
        let (next, cache) = lstm_layer_forward(&seq, cell, None)?;
        seq = next;
        lstm_caches.push(cache);
    }

    let mut flat = flatten_steps(seq);
    let mut dense_caches = Vec::with_capacity(params.dense.len());
    for layer in &params.dense {
        let (next, cache) = dense_forward(&flat, layer)?;
        flat = next;
        dense_caches.push(cache);
    }

    let out = unflatten_steps(flat, batch, steps);
    Ok((out, ForwardCache { lstm: lstm_caches, dense: dense_caches, batch, steps }))
}

/// Reverse-mode gradients of every parameter given the loss gradient w.r.t.
/// the network output, backpropagating through all timesteps.
pub fn backward<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    cache: &ForwardCache<T>,
    loss_gradient: &Array3<T>,
) -> Result<NetworkParams<T>> {
    backward_with_input_grad(spec, params, cache, loss_gradient).map(|(g, _)| g)
}

/// As [`backward`], but also returns the gradient w.r.t. the network inputs.
pub(crate) fn backward_with_input_grad<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    cache: &ForwardCache<T>,
    loss_gradient: &Array3<T>,
) -> Result<(NetworkParams<T>, Array3<T>)> {
    params.matches(spec)?;
    if cache.lstm.len() != params.lstm.len() || cache.dense.len() != params.dense.len() {
        return Err(NnError::Cache("cache layer counts do not match network".into()));
    }
    let (batch, steps, out_dim) = loss_gradient.dim();
    if batch != cache.batch || steps != cache.steps || out_dim != spec.output_dim {
        return Err(NnError::Cache("loss-gradient shape differs from cached forward pass".into()));
    }

    let mut grads = NetworkParams::zeros(spec)?;
    let mut flat = flatten_steps(loss_gradient.clone());
    for i in (0..params.dense.len()).rev() {
        let (g, dx) = dense_backward(&params.dense[i], &cache.dense[i], flat.view())?;
        grads.dense[i] = g;
        flat = dx;
    }

    let mut d_seq = unflatten_steps(flat, batch, steps);
    for i in (0..params.lstm.len()).rev() {
        let (g, dx) = lstm_layer_backward(&params.lstm[i], &cache.lstm[i], &d_seq)?;
        grads.lstm[i] = g;
        d_seq = dx;
    }
    Ok((grads, d_seq))
}
