use crate::data::{DataError, Result, SequenceBatch, TimeParamDataset};
use crate::Scalar;
use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-feature min/max statistics defining an affine map onto `[-1, 1]`.
///
/// A constant feature maps to zero and inverts back to its constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale<T> {
    mins: Vec<T>,
    maxs: Vec<T>,
}

impl<T: Scalar> FeatureScale<T> {
    /// Fit statistics over rows of a `samples x features` view.
    pub fn fit(data: ArrayView2<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(DataError::Shape("cannot fit a normalizer on empty data".into()));
        }
        let mut mins = vec![T::infinity(); data.ncols()];
        let mut maxs = vec![T::neg_infinity(); data.ncols()];
        for row in data.outer_iter() {
            for (i, &v) in row.iter().enumerate() {
                mins[i] = mins[i].min(v);
                maxs[i] = maxs[i].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    /// Pool statistics from several views over the same feature layout.
    pub fn fit_union(parts: &[ArrayView2<T>]) -> Result<Self> {
        let mut scales = parts.iter().map(|p| Self::fit(*p)).collect::<Result<Vec<_>>>()?;
        let mut merged = scales.pop().ok_or_else(|| DataError::Shape("no data to fit".into()))?;
        for s in scales {
            if s.mins.len() != merged.mins.len() {
                return Err(DataError::Shape("feature counts differ between pooled parts".into()));
            }
            for i in 0..merged.mins.len() {
                merged.mins[i] = merged.mins[i].min(s.mins[i]);
                merged.maxs[i] = merged.maxs[i].max(s.maxs[i]);
            }
        }
        Ok(merged)
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    fn mid_half(&self, i: usize) -> (T, T) {
        let two = T::of(2.0);
        ((self.mins[i] + self.maxs[i]) / two, (self.maxs[i] - self.mins[i]) / two)
    }

    fn check(&self, n_features: usize) -> Result<()> {
        if n_features != self.n_features() {
            return Err(DataError::Shape(format!(
                "data has {} features but the normalizer was fitted on {}",
                n_features,
                self.n_features()
            )));
        }
        Ok(())
    }

    fn map_last_axis<D: ndarray::Dimension + ndarray::RemoveAxis>(
        &self,
        mut data: ndarray::Array<T, D>,
        invert: bool,
    ) -> ndarray::Array<T, D> {
        let features = self.n_features();
        let last = Axis(data.ndim() - 1);
        for i in 0..features {
            let (mid, half) = self.mid_half(i);
            let mut lane = data.index_axis_mut(last, i);
            if invert {
                lane.mapv_inplace(|v| mid + half * v);
            } else if half > T::zero() {
                lane.mapv_inplace(|v| (v - mid) / half);
            } else {
                lane.fill(T::zero());
            }
        }
        data
    }

    /// Map features (last axis) onto `[-1, 1]`.
    pub fn apply2(&self, data: Array2<T>) -> Result<Array2<T>> {
        self.check(data.ncols())?;
        Ok(self.map_last_axis(data, false))
    }

    pub fn apply3(&self, data: Array3<T>) -> Result<Array3<T>> {
        self.check(data.dim().2)?;
        Ok(self.map_last_axis(data, false))
    }

    /// Inverse of [`FeatureScale::apply2`].
    pub fn invert2(&self, data: Array2<T>) -> Result<Array2<T>> {
        self.check(data.ncols())?;
        Ok(self.map_last_axis(data, true))
    }

    pub fn invert3(&self, data: Array3<T>) -> Result<Array3<T>> {
        self.check(data.dim().2)?;
        Ok(self.map_last_axis(data, true))
    }

    /// An identity map for `n` features (used where outputs are already
    /// network-scaled).
    pub fn identity(n: usize) -> Self {
        Self { mins: vec![T::of(-1.0); n], maxs: vec![T::one(); n] }
    }
}

/// Input and output statistics fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    pub inputs: FeatureScale<T>,
    pub outputs: FeatureScale<T>,
}

fn input_matrix<T: Scalar>(ds: &TimeParamDataset<T>) -> Array2<T> {
    let mut rows = Array2::zeros((ds.n_params() * ds.n_times(), ds.input_dim()));
    let mut r = 0;
    for j in 0..ds.n_params() {
        for n in 0..ds.n_times() {
            rows.row_mut(r).assign(&ds.input_row(j, n));
            r += 1;
        }
    }
    rows
}

fn output_matrix<T: Scalar>(ds: &TimeParamDataset<T>) -> Array2<T> {
    let (j, n, p) = ds.outputs().dim();
    ds.outputs().clone().into_shape_with_order((j * n, p)).expect("standard layout")
}

impl<T: Scalar> Normalizer<T> {
    /// Fit both input and output statistics on one training set.
    pub fn fit(ds: &TimeParamDataset<T>) -> Result<Self> {
        Ok(Self {
            inputs: FeatureScale::fit(input_matrix(ds).view())?,
            outputs: FeatureScale::fit(output_matrix(ds).view())?,
        })
    }

    /// Fit output statistics on `own` while pooling input statistics over all
    /// listed sets, so fidelity levels share one input scaling.
    pub fn fit_shared_inputs(own: &TimeParamDataset<T>, all: &[&TimeParamDataset<T>]) -> Result<Self> {
        let mats: Vec<Array2<T>> = all.iter().map(|ds| input_matrix(ds)).collect();
        let views: Vec<ArrayView2<T>> = mats.iter().map(|m| m.view()).collect();
        Ok(Self {
            inputs: FeatureScale::fit_union(&views)?,
            outputs: FeatureScale::fit(output_matrix(own).view())?,
        })
    }

    /// Normalize both blocks of a batch.
    pub fn normalize_batch(&self, batch: &SequenceBatch<T>) -> Result<SequenceBatch<T>> {
        let inputs = self.inputs.apply3(batch.inputs().clone())?;
        let targets = self.outputs.apply3(batch.targets().clone())?;
        SequenceBatch::from_parts(inputs, targets, batch.provenance().to_vec())
    }
}
