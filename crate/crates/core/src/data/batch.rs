use crate::data::{DataError, Result, TimeParamDataset};
use crate::Scalar;
use ndarray::{Array3, Axis};

/// Origin of one batch row: which parameter instance and which window offset
/// of its time series it was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub param_index: usize,
    pub offset: usize,
}

/// Rank-3 training blocks: inputs `rows x K x p_in` and targets
/// `rows x K x p_out`, one provenance record per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch<T> {
    inputs: Array3<T>,
    targets: Array3<T>,
    provenance: Vec<Provenance>,
}

impl<T: Scalar> SequenceBatch<T> {
    pub fn from_parts(inputs: Array3<T>, targets: Array3<T>, provenance: Vec<Provenance>) -> Result<Self> {
        if inputs.dim().0 != targets.dim().0
            || inputs.dim().1 != targets.dim().1
            || inputs.dim().0 != provenance.len()
        {
            return Err(DataError::Shape(format!(
                "batch blocks disagree: inputs {:?}, targets {:?}, provenance {}",
                inputs.dim(),
                targets.dim(),
                provenance.len()
            )));
        }
        Ok(Self { inputs, targets, provenance })
    }

    pub fn inputs(&self) -> &Array3<T> {
        &self.inputs
    }

    pub fn targets(&self) -> &Array3<T> {
        &self.targets
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn n_rows(&self) -> usize {
        self.inputs.dim().0
    }

    pub fn seq_len(&self) -> usize {
        self.inputs.dim().1
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.dim().2
    }

    pub fn output_dim(&self) -> usize {
        self.targets.dim().2
    }

    /// A new batch holding the selected rows.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
            provenance: idx.iter().map(|&i| self.provenance[i]).collect(),
        }
    }

    /// Replace the input block, e.g. after appending upstream model outputs.
    pub fn with_inputs(&self, inputs: Array3<T>) -> Result<Self> {
        Self::from_parts(inputs, self.targets.clone(), self.provenance.clone())
    }
}

/// Window start offsets: `0, stride, 2 stride, ...` plus a final window
/// clamped to end at `n_t - 1` when the tail would otherwise be uncovered.
/// The effective stride is capped at `k` so every sample falls in a window.
pub fn window_offsets(n_t: usize, k: usize, stride: usize) -> Vec<usize> {
    let stride = stride.min(k);
    let last = n_t - k;
    let mut offsets: Vec<usize> = (0..=last).step_by(stride).collect();
    if *offsets.last().expect("at least offset 0") != last {
        offsets.push(last);
    }
    offsets
}

/// Cut each parameter instance's series into sliding windows of length `k`.
///
/// With `k` equal to the grid length every instance yields exactly one
/// full-length sequence. Every `(mu, t)` sample is covered by at least one
/// window for any legal `(k, stride)`.
pub fn make_subsequences<T: Scalar>(
    dataset: &TimeParamDataset<T>,
    k: usize,
    stride: usize,
) -> Result<SequenceBatch<T>> {
    let n_t = dataset.n_times();
    if k == 0 || k > n_t {
        return Err(DataError::Domain(format!(
            "subsequence length {k} outside [1, {n_t}]"
        )));
    }
    if stride == 0 {
        return Err(DataError::Domain("stride must be positive".into()));
    }
    let offsets = window_offsets(n_t, k, stride);
    let rows = dataset.n_params() * offsets.len();
    let mut inputs = Array3::zeros((rows, k, dataset.input_dim()));
    let mut targets = Array3::zeros((rows, k, dataset.output_dim()));
    let mut provenance = Vec::with_capacity(rows);
    let mut row = 0;
    for j in 0..dataset.n_params() {
        for &offset in &offsets {
            for n in 0..k {
                inputs
                    .slice_mut(ndarray::s![row, n, ..])
                    .assign(&dataset.input_row(j, offset + n));
                targets
                    .slice_mut(ndarray::s![row, n, ..])
                    .assign(&dataset.outputs().slice(ndarray::s![j, offset + n, ..]));
            }
            provenance.push(Provenance { param_index: j, offset });
            row += 1;
        }
    }
    SequenceBatch::from_parts(inputs, targets, provenance)
}
