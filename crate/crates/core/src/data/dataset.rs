use crate::data::{DataError, Result};
use crate::Scalar;
use ndarray::{Array1, Array2, Array3, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Data-source accuracy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fidelity {
    Low,
    High,
    /// Level `m` of a multi-level hierarchy, 1-based and sorted by accuracy.
    Level(u32),
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fidelity::Low => write!(f, "LF"),
            Fidelity::High => write!(f, "HF"),
            Fidelity::Level(m) => write!(f, "level-{m}"),
        }
    }
}

impl std::str::FromStr for Fidelity {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "LF" => Ok(Fidelity::Low),
            "HF" => Ok(Fidelity::High),
            other => match other.strip_prefix("LEVEL-").and_then(|m| m.parse().ok()) {
                Some(m) => Ok(Fidelity::Level(m)),
                None => Err(format!("unknown fidelity tag '{s}'")),
            },
        }
    }
}

impl Serialize for Fidelity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fidelity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        tag.parse().map_err(serde::de::Error::custom)
    }
}

/// A uniform time grid `t_n = t0 + n dt`, `n = 0 .. len-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub t0: T,
    pub dt: T,
    pub len: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(t0: T, dt: T, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(DataError::Domain("time grid must contain at least one instant".into()));
        }
        if !(dt > T::zero()) || !t0.is_finite() {
            return Err(DataError::Domain("time grid requires finite t0 and positive dt".into()));
        }
        Ok(Self { t0, dt, len })
    }

    /// Validate that explicit instants are strictly increasing and uniform to
    /// a 1e-12 relative tolerance, then represent them as a grid.
    pub fn from_times(times: &[T]) -> Result<Self> {
        if times.len() < 2 {
            return match times {
                [t0] => Self::new(*t0, T::one(), 1),
                _ => Err(DataError::Domain("time grid must contain at least one instant".into())),
            };
        }
        let dt = times[1] - times[0];
        if !(dt > T::zero()) {
            return Err(DataError::Domain("time grid must be strictly increasing".into()));
        }
        let tol = T::of(1e-12) * dt.abs().max(times[0].abs()).max(T::one());
        for (n, pair) in times.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if (step - dt).abs() > tol {
                return Err(DataError::Domain(format!(
                    "time grid is not uniform at index {}: step {} vs {}",
                    n + 1,
                    step,
                    dt
                )));
            }
        }
        Self::new(times[0], dt, times.len())
    }

    pub fn time(&self, n: usize) -> T {
        self.t0 + T::from_usize(n).expect("index") * self.dt
    }

    pub fn times(&self) -> Array1<T> {
        Array1::from_iter((0..self.len).map(|n| self.time(n)))
    }

    pub fn end(&self) -> T {
        self.time(self.len - 1)
    }

    /// Number of leading instants with `t <= t_star` (up to a relative step
    /// tolerance so grid endpoints compare as expected).
    fn len_until(&self, t_star: T) -> usize {
        let tol = self.dt * T::of(1e-9);
        (0..self.len).take_while(|&n| self.time(n) <= t_star + tol).count()
    }
}

/// A fidelity-tagged collection of output sequences over a tensor-product
/// `(mu, t)` sampling.
///
/// `outputs[j, n, :]` holds the quantities of interest at parameter instance
/// `j` and time `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeParamDataset<T> {
    fidelity: Fidelity,
    params: Array2<T>,
    grid: TimeGrid<T>,
    outputs: Array3<T>,
    domain: Vec<(T, T)>,
    end_time: Option<T>,
}

impl<T: Scalar> TimeParamDataset<T> {
    pub fn new(
        fidelity: Fidelity,
        params: Array2<T>,
        grid: TimeGrid<T>,
        outputs: Array3<T>,
        domain: Vec<(T, T)>,
    ) -> Result<Self> {
        if params.nrows() == 0 {
            return Err(DataError::Domain("dataset requires at least one parameter instance".into()));
        }
        if domain.len() != params.ncols() {
            return Err(DataError::Shape(format!(
                "domain box has {} dimensions but parameters have {}",
                domain.len(),
                params.ncols()
            )));
        }
        if outputs.dim().0 != params.nrows() || outputs.dim().1 != grid.len || outputs.dim().2 == 0 {
            return Err(DataError::Shape(format!(
                "output array {:?} does not match {} instances x {} instants",
                outputs.dim(),
                params.nrows(),
                grid.len
            )));
        }
        if !outputs.iter().all(|v| v.is_finite()) || !params.iter().all(|v| v.is_finite()) {
            return Err(DataError::Domain("dataset contains non-finite values".into()));
        }
        for (j, row) in params.outer_iter().enumerate() {
            for (d, &(lo, hi)) in row.iter().zip(domain.iter()) {
                if *d < lo || *d > hi {
                    return Err(DataError::Domain(format!(
                        "parameter instance {j} lies outside the domain box: {d} not in [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Self { fidelity, params, grid, outputs, domain, end_time: None })
    }

    /// Declare the nominal end time of this fidelity level (defaults to the
    /// last grid instant).
    pub fn with_end_time(mut self, end: T) -> Self {
        self.end_time = Some(end);
        self
    }

    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    pub fn params(&self) -> &Array2<T> {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn outputs(&self) -> &Array3<T> {
        &self.outputs
    }

    pub fn domain(&self) -> &[(T, T)] {
        &self.domain
    }

    pub fn end_time(&self) -> T {
        self.end_time.unwrap_or_else(|| self.grid.end())
    }

    pub fn n_params(&self) -> usize {
        self.params.nrows()
    }

    pub fn param_dim(&self) -> usize {
        self.params.ncols()
    }

    pub fn n_times(&self) -> usize {
        self.grid.len
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.dim().2
    }

    /// Input dimension of the induced regression problem, `p_mu + 1`.
    pub fn input_dim(&self) -> usize {
        self.param_dim() + 1
    }

    /// The network input `(t_n, mu_j)` for one sample.
    pub fn input_row(&self, j: usize, n: usize) -> Array1<T> {
        let mut row = Array1::zeros(self.input_dim());
        row[0] = self.grid.time(n);
        row.slice_mut(ndarray::s![1..]).assign(&self.params.row(j));
        row
    }

    /// Keep only instants with `t <= t_star`.
    pub fn truncate_time(&self, t_star: T) -> Result<Self> {
        let keep = self.grid.len_until(t_star);
        if keep < 2 {
            return Err(DataError::Domain(format!(
                "truncation at t* = {t_star} leaves {keep} time steps (need at least 2)"
            )));
        }
        let mut out = self.clone();
        out.grid.len = keep;
        out.outputs = self.outputs.slice(ndarray::s![.., ..keep, ..]).to_owned();
        out.end_time = Some(out.grid.end());
        Ok(out)
    }

    /// Keep only the selected parameter instances.
    pub fn select_params(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(DataError::Domain("parameter selection is empty".into()));
        }
        if idx.iter().any(|&j| j >= self.n_params()) {
            return Err(DataError::Domain("parameter selection out of range".into()));
        }
        let mut out = self.clone();
        out.params = self.params.select(Axis(0), idx);
        out.outputs = self.outputs.select(Axis(0), idx);
        Ok(out)
    }
}

/// A source of output sequences for dataset construction. Implementations
/// may integrate a full trajectory at once; pointwise closures can use
/// [`PointEvaluator`].
pub trait SequenceEvaluator<T: Scalar> {
    fn output_dim(&self) -> usize;

    /// Evaluate the quantities of interest for one parameter instance over
    /// the whole grid; returns an `len x output_dim` array.
    fn eval_sequence(&self, mu: ArrayView1<T>, grid: &TimeGrid<T>) -> std::result::Result<Array2<T>, String>;
}

/// Adapter turning a pointwise `(t, mu) -> outputs` closure into a
/// [`SequenceEvaluator`].
pub struct PointEvaluator<F> {
    output_dim: usize,
    f: F,
}

impl<F> PointEvaluator<F> {
    pub fn new(output_dim: usize, f: F) -> Self {
        Self { output_dim, f }
    }
}

impl<T: Scalar, F> SequenceEvaluator<T> for PointEvaluator<F>
where
    F: Fn(T, ArrayView1<T>) -> std::result::Result<Vec<T>, String>,
{
    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval_sequence(&self, mu: ArrayView1<T>, grid: &TimeGrid<T>) -> std::result::Result<Array2<T>, String> {
        let mut out = Array2::zeros((grid.len, self.output_dim));
        for n in 0..grid.len {
            let values = (self.f)(grid.time(n), mu)?;
            if values.len() != self.output_dim {
                return Err(format!(
                    "evaluator returned {} values, expected {}",
                    values.len(),
                    self.output_dim
                ));
            }
            for (k, v) in values.into_iter().enumerate() {
                out[[n, k]] = v;
            }
        }
        Ok(out)
    }
}

/// Tensor-product evaluation of a generator over all `(mu, t)` pairs.
pub fn build_grid_dataset<T: Scalar>(
    fidelity: Fidelity,
    params: Array2<T>,
    grid: TimeGrid<T>,
    domain: Vec<(T, T)>,
    evaluator: &dyn SequenceEvaluator<T>,
) -> Result<TimeParamDataset<T>> {
    let p_out = evaluator.output_dim();
    let mut outputs = Array3::zeros((params.nrows(), grid.len, p_out));
    for (j, mu) in params.outer_iter().enumerate() {
        let seq = evaluator.eval_sequence(mu, &grid).map_err(|message| DataError::Evaluator {
            param_index: j,
            time: grid.t0.to_f64().unwrap_or(f64::NAN),
            message,
        })?;
        if seq.dim() != (grid.len, p_out) {
            return Err(DataError::Shape(format!(
                "evaluator returned {:?}, expected ({}, {})",
                seq.dim(),
                grid.len,
                p_out
            )));
        }
        if let Some((n, _)) = seq.outer_iter().enumerate().find(|(_, row)| !row.iter().all(|v| v.is_finite())) {
            return Err(DataError::Evaluator {
                param_index: j,
                time: grid.time(n).to_f64().unwrap_or(f64::NAN),
                message: "non-finite output".into(),
            });
        }
        outputs.index_axis_mut(Axis(0), j).assign(&seq);
    }
    TimeParamDataset::new(fidelity, params, grid, outputs, domain)
}

/// Uniformly spaced values covering `[lo, hi]` inclusive.
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Array1<T> {
    if n == 1 {
        return Array1::from_elem(1, lo);
    }
    let step = (hi - lo) / T::from_usize(n - 1).expect("count");
    Array1::from_iter((0..n).map(|i| lo + step * T::from_usize(i).expect("index")))
}

/// `n` values at cell midpoints of a uniform partition of `[lo, hi]`; offset
/// from `linspace` grids so test parameters never coincide with training ones.
pub fn midpoints<T: Scalar>(lo: T, hi: T, n: usize) -> Array1<T> {
    let step = (hi - lo) / T::from_usize(n).expect("count");
    Array1::from_iter((0..n).map(|i| lo + step * (T::from_usize(i).expect("index") + T::of(0.5))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn constant_evaluator_fills_grid() {
        let params = arr2(&[[0.1], [0.9]]);
        let grid = TimeGrid::new(0.0, 0.5, 3).unwrap();
        let eval = PointEvaluator::new(1, |_t: f64, _mu: ArrayView1<f64>| Ok(vec![7.0]));
        let ds = build_grid_dataset(Fidelity::Low, params, grid, vec![(0.0, 1.0)], &eval).unwrap();
        assert_eq!(ds.outputs().dim(), (2, 3, 1));
        assert!(ds.outputs().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn evaluator_failure_reports_instance() {
        let params = arr2(&[[0.1], [0.9]]);
        let grid = TimeGrid::new(0.0, 0.5, 3).unwrap();
        let eval = PointEvaluator::new(1, |_t: f64, mu: ArrayView1<f64>| {
            if mu[0] > 0.5 {
                Err("boom".to_string())
            } else {
                Ok(vec![1.0])
            }
        });
        match build_grid_dataset(Fidelity::Low, params, grid, vec![(0.0, 1.0)], &eval) {
            Err(DataError::Evaluator { param_index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_grid_count_includes_t_zero() {
        // 61 samples per instance for dt = 0.25 up to T = 15.
        let grid = TimeGrid::new(0.0f64, 0.25, 61);
        assert!(grid.is_ok());
        let grid = grid.unwrap();
        assert_eq!(grid.end(), 15.0);
        let times: Vec<f64> = grid.times().to_vec();
        assert_eq!(times.len(), 61);
        assert_eq!(TimeGrid::from_times(&times).unwrap(), grid);
    }

    #[test]
    fn non_uniform_times_are_rejected() {
        let times = [0.0, 0.1, 0.25];
        assert!(matches!(TimeGrid::from_times(&times), Err(DataError::Domain(_))));
    }

    #[test]
    fn out_of_domain_parameter_is_rejected() {
        let params = arr2(&[[2.0]]);
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let outputs = Array3::zeros((1, 2, 1));
        assert!(matches!(
            TimeParamDataset::new(Fidelity::High, params, grid, outputs, vec![(0.0, 1.0)]),
            Err(DataError::Domain(_))
        ));
    }

    #[test]
    fn truncation_keeps_leading_window() {
        let params = arr2(&[[0.5]]);
        let grid = TimeGrid::new(0.0, 0.25, 61).unwrap();
        let outputs = Array3::from_shape_fn((1, 61, 1), |(_, n, _)| n as f64);
        let ds = TimeParamDataset::new(Fidelity::Low, params, grid, outputs, vec![(0.0, 1.0)]).unwrap();
        let cut = ds.truncate_time(10.0).unwrap();
        assert_eq!(cut.n_times(), 41);
        assert_eq!(cut.grid().end(), 10.0);
        assert!(ds.truncate_time(0.1).is_err());
    }

    #[test]
    fn fidelity_tags_round_trip() {
        for f in [Fidelity::Low, Fidelity::High, Fidelity::Level(3)] {
            let s = f.to_string();
            assert_eq!(s.parse::<Fidelity>().unwrap(), f);
        }
    }
}
