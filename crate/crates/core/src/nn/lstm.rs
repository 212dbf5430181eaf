use crate::nn::{NnError, Result};
use crate::Scalar;
use ndarray::{concatenate, s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::Rng;

/// Trainable parameters of one LSTM cell: one weight matrix and bias per gate
/// (forget, update, output) plus the candidate cell state.
///
/// Each weight matrix has shape `hidden x (hidden + input)` and acts on the
/// concatenation `[h_prev, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams<T> {
    pub w_f: Array2<T>,
    pub w_u: Array2<T>,
    pub w_o: Array2<T>,
    pub w_c: Array2<T>,
    pub b_f: Array1<T>,
    pub b_u: Array1<T>,
    pub b_o: Array1<T>,
    pub b_c: Array1<T>,
}

impl<T: Scalar> LstmCellParams<T> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = || Array2::zeros((hidden, hidden + input));
        let b = || Array1::zeros(hidden);
        Self { w_f: w(), w_u: w(), w_o: w(), w_c: w(), b_f: b(), b_u: b(), b_o: b(), b_c: b() }
    }

    /// Glorot-uniform weights, zero biases. Draw order is fixed (f, u, o, c)
    /// so that a given RNG stream always yields the same initialization.
    pub fn glorot<R: Rng>(hidden: usize, input: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(hidden, input);
        let limit = (6.0 / (hidden + input + hidden) as f64).sqrt();
        let dist = Uniform::new(T::of(-limit), T::of(limit)).expect("glorot bounds");
        for w in [&mut p.w_f, &mut p.w_u, &mut p.w_o, &mut p.w_c] {
            let data: Vec<T> = (0..w.len()).map(|_| dist.sample(rng)).collect();
            *w = Array2::from_shape_vec(w.raw_dim(), data).expect("shape");
        }
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.w_f.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.w_f.ncols() - self.w_f.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.w_f.raw_dim();
        if dim[1] <= dim[0] {
            return Err(NnError::Shape(format!(
                "LSTM weight matrix {}x{} leaves no input columns",
                dim[0], dim[1]
            )));
        }
        for w in [&self.w_u, &self.w_o, &self.w_c] {
            if w.raw_dim() != dim {
                return Err(NnError::Shape("LSTM gate weight shapes differ".into()));
            }
        }
        for b in [&self.b_f, &self.b_u, &self.b_o, &self.b_c] {
            if b.len() != dim[0] {
                return Err(NnError::Shape("LSTM bias length differs from hidden size".into()));
            }
        }
        let finite = [&self.w_f, &self.w_u, &self.w_o, &self.w_c]
            .iter()
            .all(|w| w.iter().all(|v| v.is_finite()))
            && [&self.b_f, &self.b_u, &self.b_o, &self.b_c]
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(NnError::NonFinite("LSTM parameters"));
        }
        Ok(())
    }
}

/// Recurrent and cell state of one LSTM cell for a single sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Array1<T>,
    pub c: Array1<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: Array1::zeros(hidden), c: Array1::zeros(hidden) }
    }
}

/// Intermediates of one time step kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GateCache<T> {
    /// Concatenated `[h_prev, x]`, shape `batch x (hidden + input)`.
    pub(crate) z: Array2<T>,
    pub(crate) f: Array2<T>,
    pub(crate) u: Array2<T>,
    pub(crate) o: Array2<T>,
    pub(crate) c_tilde: Array2<T>,
    pub(crate) c_prev: Array2<T>,
    pub(crate) tanh_c: Array2<T>,
}

impl<T: Scalar> GateCache<T> {
    pub fn forget(&self) -> ArrayView2<'_, T> {
        self.f.view()
    }
    pub fn update(&self) -> ArrayView2<'_, T> {
        self.u.view()
    }
    pub fn output(&self) -> ArrayView2<'_, T> {
        self.o.view()
    }
    pub fn candidate(&self) -> ArrayView2<'_, T> {
        self.c_tilde.view()
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// One LSTM step over a batch: inputs `batch x input`, states `batch x hidden`.
pub(crate) fn lstm_step<T: Scalar>(
    x: ArrayView2<T>,
    h_prev: &Array2<T>,
    c_prev: &Array2<T>,
    params: &LstmCellParams<T>,
) -> (Array2<T>, Array2<T>, GateCache<T>) {
    let z = concatenate![Axis(1), h_prev.view(), x];
    let gate = |w: &Array2<T>, b: &Array1<T>| z.dot(&w.t()) + b;
    let f = gate(&params.w_f, &params.b_f).mapv(sigmoid);
    let u = gate(&params.w_u, &params.b_u).mapv(sigmoid);
    let o = gate(&params.w_o, &params.b_o).mapv(sigmoid);
    let c_tilde = gate(&params.w_c, &params.b_c).mapv(|v| v.tanh());
    let c = &f * c_prev + &u * &c_tilde;
    let tanh_c = c.mapv(|v| v.tanh());
    let h = &o * &tanh_c;
    let cache = GateCache { z, f, u, o, c_tilde, c_prev: c_prev.clone(), tanh_c };
    (h, c, cache)
}

/// Advance a single LSTM cell by one step.
///
/// Gates are `sigmoid(W [h_prev, x] + b)`; the cell state becomes
/// `f * c_prev + u * tanh(W_c [h_prev, x] + b_c)` and the new recurrent state
/// is `o * tanh(c)`.
pub fn lstm_cell_forward<T: Scalar>(
    x: ArrayView1<T>,
    state: &LstmState<T>,
    params: &LstmCellParams<T>,
) -> Result<(LstmState<T>, GateCache<T>)> {
    params.validate()?;
    if x.len() != params.input_size() {
        return Err(NnError::Shape(format!(
            "input length {} does not match cell input size {}",
            x.len(),
            params.input_size()
        )));
    }
    if state.h.len() != params.hidden_size() || state.c.len() != params.hidden_size() {
        return Err(NnError::Shape(format!(
            "state lengths ({}, {}) do not match hidden size {}",
            state.h.len(),
            state.c.len(),
            params.hidden_size()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) || !state.h.iter().all(|v| v.is_finite()) || !state.c.iter().all(|v| v.is_finite()) {
        return Err(NnError::NonFinite("LSTM cell input"));
    }
    let xm = x.insert_axis(Axis(0));
    let hm = state.h.view().insert_axis(Axis(0)).to_owned();
    let cm = state.c.view().insert_axis(Axis(0)).to_owned();
    let (h, c, cache) = lstm_step(xm, &hm, &cm, params);
    let next = LstmState { h: h.index_axis(Axis(0), 0).to_owned(), c: c.index_axis(Axis(0), 0).to_owned() };
    Ok((next, cache))
}

/// Per-step caches of a full layer pass.
#[derive(Debug, Clone)]
pub struct LstmLayerCache<T> {
    pub(crate) steps: Vec<GateCache<T>>,
}

/// Run one LSTM layer over a batch of sequences (`batch x steps x input`),
/// returning the full hidden sequence (`batch x steps x hidden`).
///
/// The initial state defaults to zeros for every sequence.
pub fn lstm_layer_forward<T: Scalar>(
    inputs: &Array3<T>,
    params: &LstmCellParams<T>,
    initial: Option<(&Array2<T>, &Array2<T>)>,
) -> Result<(Array3<T>, LstmLayerCache<T>)> {
    let (batch, steps, in_dim) = inputs.dim();
    if batch == 0 || steps == 0 {
        return Err(NnError::Shape("empty batch".into()));
    }
    if in_dim != params.input_size() {
        return Err(NnError::Shape(format!(
            "batch input dim {} does not match cell input size {}",
            in_dim,
            params.input_size()
        )));
    }
    let hidden = params.hidden_size();
    let (mut h, mut c) = match initial {
        Some((h0, c0)) => {
            if h0.dim() != (batch, hidden) || c0.dim() != (batch, hidden) {
                return Err(NnError::Shape("initial state shape mismatch".into()));
            }
            (h0.clone(), c0.clone())
        }
        None => (Array2::zeros((batch, hidden)), Array2::zeros((batch, hidden))),
    };
    let mut hidden_seq = Array3::zeros((batch, steps, hidden));
    let mut caches = Vec::with_capacity(steps);
    for n in 0..steps {
        let x = inputs.index_axis(Axis(1), n);
        let (h_next, c_next, cache) = lstm_step(x, &h, &c, params);
        hidden_seq.slice_mut(s![.., n, ..]).assign(&h_next);
        h = h_next;
        c = c_next;
        caches.push(cache);
    }
    Ok((hidden_seq, LstmLayerCache { steps: caches }))
}

/// Backpropagate through time across one layer. `d_hidden` is the loss
/// gradient w.r.t. the full hidden sequence; returns parameter gradients and
/// the gradient w.r.t. the layer inputs.
pub(crate) fn lstm_layer_backward<T: Scalar>(
    params: &LstmCellParams<T>,
    cache: &LstmLayerCache<T>,
    d_hidden: &Array3<T>,
) -> Result<(LstmCellParams<T>, Array3<T>)> {
    let steps = cache.steps.len();
    let (batch, dsteps, hdim) = d_hidden.dim();
    let hidden = params.hidden_size();
    let input = params.input_size();
    if dsteps != steps || hdim != hidden || cache.steps.iter().any(|c| c.z.nrows() != batch) {
        return Err(NnError::Cache("hidden-gradient shape differs from cached forward pass".into()));
    }
    if cache.steps.iter().any(|c| c.z.ncols() != hidden + input) {
        return Err(NnError::Cache("cached step width differs from cell parameters".into()));
    }

    let mut grads = LstmCellParams::zeros(hidden, input);
    let mut d_inputs = Array3::zeros((batch, steps, input));
    let mut dh_carry = Array2::<T>::zeros((batch, hidden));
    let mut dc_carry = Array2::<T>::zeros((batch, hidden));
    let one = T::one();

    for n in (0..steps).rev() {
        let sc = &cache.steps[n];
        let dh = &d_hidden.index_axis(Axis(1), n).to_owned() + &dh_carry;
        let dc = &dh * &sc.o * &sc.tanh_c.mapv(|v| one - v * v) + &dc_carry;

        let df_pre = &dc * &sc.c_prev * &sc.f.mapv(|v| v * (one - v));
        let du_pre = &dc * &sc.c_tilde * &sc.u.mapv(|v| v * (one - v));
        let do_pre = &dh * &sc.tanh_c * &sc.o.mapv(|v| v * (one - v));
        let dct_pre = &dc * &sc.u * &sc.c_tilde.mapv(|v| one - v * v);

        for (d_pre, w, dw, db) in [
            (&df_pre, &params.w_f, &mut grads.w_f, &mut grads.b_f),
            (&du_pre, &params.w_u, &mut grads.w_u, &mut grads.b_u),
            (&do_pre, &params.w_o, &mut grads.w_o, &mut grads.b_o),
            (&dct_pre, &params.w_c, &mut grads.w_c, &mut grads.b_c),
        ] {
            *dw += &d_pre.t().dot(&sc.z);
            *db += &d_pre.sum_axis(Axis(0));
            let _ = w;
        }

        let dz = df_pre.dot(&params.w_f)
            + du_pre.dot(&params.w_u)
            + do_pre.dot(&params.w_o)
            + dct_pre.dot(&params.w_c);
        dh_carry = dz.slice(s![.., ..hidden]).to_owned();
        d_inputs.slice_mut(s![.., n, ..]).assign(&dz.slice(s![.., hidden..]));
        dc_carry = &dc * &sc.f;
    }
    Ok((grads, d_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cell(hidden: usize, input: usize, seed: u64) -> LstmCellParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LstmCellParams::glorot(hidden, input, &mut rng)
    }

    /// Scalar-loop evaluation of the gate formulas, kept independent of the
    /// ndarray implementation.
    fn scalar_cell_oracle(
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        p: &LstmCellParams<f64>,
    ) -> (Vec<f64>, Vec<f64>) {
        let hidden = p.hidden_size();
        let z: Vec<f64> = h_prev.iter().chain(x.iter()).copied().collect();
        let act = |w: &Array2<f64>, b: &Array1<f64>, i: usize| -> f64 {
            let mut s = b[i];
            for (j, zj) in z.iter().enumerate() {
                s += w[[i, j]] * zj;
            }
            s
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        for i in 0..hidden {
            let f = sig(act(&p.w_f, &p.b_f, i));
            let u = sig(act(&p.w_u, &p.b_u, i));
            let o = sig(act(&p.w_o, &p.b_o, i));
            let ct = act(&p.w_c, &p.b_c, i).tanh();
            c[i] = f * c_prev[i] + u * ct;
            h[i] = o * c[i].tanh();
        }
        (h, c)
    }

    #[test]
    fn zero_parameters_halve_cell_state() {
        let p = LstmCellParams::<f64>::zeros(3, 2);
        let state = LstmState { h: Array1::zeros(3), c: ndarray::arr1(&[0.4, -1.0, 2.0]) };
        let x = ndarray::arr1(&[5.0, -7.0]);
        let (next, cache) = lstm_cell_forward(x.view(), &state, &p).unwrap();
        for g in [cache.forget(), cache.update(), cache.output()] {
            assert!(g.iter().all(|&v| v == 0.5));
        }
        assert!(cache.candidate().iter().all(|&v| v == 0.0));
        for i in 0..3 {
            assert_abs_diff_eq!(next.c[i], 0.5 * state.c[i], epsilon = 1e-15);
            assert_abs_diff_eq!(next.h[i], 0.5 * (0.5 * state.c[i]).tanh(), epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_parameters_zero_state_is_fixed_point() {
        let p = LstmCellParams::<f64>::zeros(4, 3);
        let state = LstmState::zeros(4);
        let x = ndarray::arr1(&[1.0, 2.0, 3.0]);
        let (next, _) = lstm_cell_forward(x.view(), &state, &p).unwrap();
        assert!(next.h.iter().all(|&v| v == 0.0));
        assert!(next.c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cell_matches_scalar_loop_oracle() {
        let p = random_cell(2, 1, 17);
        let state = LstmState { h: ndarray::arr1(&[0.3, -0.2]), c: ndarray::arr1(&[0.1, 0.8]) };
        let x = ndarray::arr1(&[0.7]);
        let (next, _) = lstm_cell_forward(x.view(), &state, &p).unwrap();
        let (h_ref, c_ref) = scalar_cell_oracle(&[0.7], &[0.3, -0.2], &[0.1, 0.8], &p);
        for i in 0..2 {
            assert_abs_diff_eq!(next.h[i], h_ref[i], epsilon = 1e-12);
            assert_abs_diff_eq!(next.c[i], c_ref[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn layer_with_one_step_equals_cell() {
        let p = random_cell(3, 2, 5);
        let x = ndarray::arr1(&[0.2, -0.4]);
        let inputs = x.clone().insert_axis(Axis(0)).insert_axis(Axis(0)).to_owned();
        let (seq, _) = lstm_layer_forward(&inputs, &p, None).unwrap();
        let (next, _) = lstm_cell_forward(x.view(), &LstmState::zeros(3), &p).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(seq[[0, 0, i]], next.h[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_layer_produces_zero_sequence() {
        let p = LstmCellParams::<f64>::zeros(4, 2);
        let inputs = Array3::from_shape_fn((3, 20, 2), |(b, k, i)| (b + k + i) as f64 * 0.1);
        let (seq, _) = lstm_layer_forward(&inputs, &p, None).unwrap();
        assert!(seq.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layer_equals_chained_cells() {
        let p = random_cell(3, 2, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dist = Uniform::new(-1.0f64, 1.0).unwrap();
        let inputs = Array3::from_shape_vec(
            (1, 3, 2),
            (0..6).map(|_| dist.sample(&mut rng)).collect(),
        )
        .unwrap();
        let (seq, _) = lstm_layer_forward(&inputs, &p, None).unwrap();
        let mut state = LstmState::zeros(3);
        for n in 0..3 {
            let x = inputs.slice(s![0, n, ..]);
            let (next, _) = lstm_cell_forward(x, &state, &p).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(seq[[0, n, i]], next.h[i], epsilon = 1e-12);
            }
            state = next;
        }
    }

    #[test]
    fn gate_ranges_are_open_intervals() {
        let p = random_cell(4, 3, 31);
        let inputs = Array3::from_shape_fn((2, 6, 3), |(b, k, i)| ((b * 7 + k * 3 + i) as f64).sin() * 3.0);
        let (seq, cache) = lstm_layer_forward(&inputs, &p, None).unwrap();
        assert!(seq.iter().all(|&h| h.abs() < 1.0));
        for step in &cache.steps {
            for g in [&step.f, &step.u, &step.o] {
                assert!(g.iter().all(|&v| v > 0.0 && v < 1.0));
            }
            assert!(step.c_tilde.iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = random_cell(2, 2, 1);
        let state = LstmState::zeros(2);
        let x = ndarray::arr1(&[1.0]);
        assert!(matches!(lstm_cell_forward(x.view(), &state, &p), Err(NnError::Shape(_))));
    }

    #[test]
    fn non_finite_input_is_reported() {
        let p = random_cell(2, 1, 2);
        let state = LstmState::zeros(2);
        let x = ndarray::arr1(&[f64::NAN]);
        assert!(matches!(lstm_cell_forward(x.view(), &state, &p), Err(NnError::NonFinite(_))));
    }

    #[test]
    fn empty_batch_is_rejected() {
        let p = random_cell(2, 1, 3);
        let inputs = Array3::<f64>::zeros((0, 4, 1));
        assert!(lstm_layer_forward(&inputs, &p, None).is_err());
    }
}
