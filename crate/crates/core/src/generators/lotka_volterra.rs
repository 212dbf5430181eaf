use crate::data::{build_grid_dataset, Fidelity, SequenceEvaluator, TimeGrid, TimeParamDataset};
use crate::generators::{GenError, Result};
use crate::Scalar;
use ndarray::{Array2, ArrayView1, Axis};

/// Parameter domain of the three-species system.
pub const LV_DOMAIN: (f64, f64) = (1.0, 3.0);

/// Configuration of one trajectory: growth/decay parameter `mu`, time step,
/// and final time. All populations start at 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LotkaVolterraConfig<T> {
    pub mu: T,
    pub dt: T,
    pub t_end: T,
}

impl<T: Scalar> LotkaVolterraConfig<T> {
    pub fn new(mu: T, dt: T, t_end: T) -> Result<Self> {
        if !(T::of(LV_DOMAIN.0)..=T::of(LV_DOMAIN.1)).contains(&mu) {
            return Err(GenError::Config(format!(
                "mu = {mu} outside [{}, {}]",
                LV_DOMAIN.0, LV_DOMAIN.1
            )));
        }
        if !(dt > T::zero()) || !(t_end > T::zero()) {
            return Err(GenError::Config("dt and t_end must be positive".into()));
        }
        let q = t_end / dt;
        if (q - q.round()).abs() > q.abs() * T::epsilon() {
            return Err(GenError::Config(format!(
                "t_end/dt = {q} is not within one ulp of an integer"
            )));
        }
        Ok(Self { mu, dt, t_end })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().expect("step count")
    }
}

/// Right-hand side of the three-species prey-predator system.
pub fn lv_rhs<T: Scalar>(y: [T; 3], mu: T) -> [T; 3] {
    let [y1, y2, y3] = y;
    [
        y1 * (mu - T::of(0.1) * y1 - T::of(0.5) * y2 - T::of(0.5) * y3),
        y2 * (-mu + T::of(0.5) * y1 - T::of(0.3) * y3),
        y3 * (-mu + T::of(0.2) * y1 + T::of(0.5) * y2),
    ]
}

/// Integrate with the explicit midpoint RK2 scheme; the returned trajectory
/// is `(n_steps + 1) x 3` on the instants `0, dt, ..., t_end`.
pub fn integrate_rk2<T: Scalar>(config: &LotkaVolterraConfig<T>) -> Result<Array2<T>> {
    let n = config.n_steps();
    let half = T::of(0.5);
    let mut traj = Array2::zeros((n + 1, 3));
    let mut y = [T::of(0.5); 3];
    traj.row_mut(0).assign(&ndarray::arr1(&y));
    for step in 0..n {
        let k1 = lv_rhs(y, config.mu);
        let mid = [
            y[0] + half * config.dt * k1[0],
            y[1] + half * config.dt * k1[1],
            y[2] + half * config.dt * k1[2],
        ];
        let k2 = lv_rhs(mid, config.mu);
        for i in 0..3 {
            y[i] = y[i] + config.dt * k2[i];
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(GenError::Diverged {
                step: step + 1,
                time: (config.dt * T::from_usize(step + 1).unwrap()).to_f64().unwrap_or(f64::NAN),
            });
        }
        traj.row_mut(step + 1).assign(&ndarray::arr1(&y));
    }
    Ok(traj)
}

struct LvEvaluator<T> {
    solver_dt: T,
    sample_every: usize,
}

impl<T: Scalar> SequenceEvaluator<T> for LvEvaluator<T> {
    fn output_dim(&self) -> usize {
        3
    }

    fn eval_sequence(&self, mu: ArrayView1<T>, grid: &TimeGrid<T>) -> std::result::Result<Array2<T>, String> {
        if grid.t0 != T::zero() {
            return Err("Lotka-Volterra grids start at t = 0".into());
        }
        let expect_dt = self.solver_dt * T::from_usize(self.sample_every).unwrap();
        if (grid.dt - expect_dt).abs() > expect_dt * T::of(1e-9) {
            return Err(format!(
                "grid step {} is not solver step {} times {}",
                grid.dt, self.solver_dt, self.sample_every
            ));
        }
        let t_end = expect_dt * T::from_usize(grid.len - 1).unwrap();
        let cfg = LotkaVolterraConfig::new(mu[0], self.solver_dt, t_end.max(self.solver_dt))
            .map_err(|e| e.to_string())?;
        let traj = integrate_rk2(&cfg).map_err(|e| e.to_string())?;
        let idx: Vec<usize> = (0..grid.len).map(|i| i * self.sample_every).collect();
        Ok(traj.select(Axis(0), &idx))
    }
}

/// Tensor-product dataset over `mu_values`, integrating at `solver_dt` and
/// collecting every `sample_every` steps onto the given grid.
pub fn lv_dataset<T: Scalar>(
    fidelity: Fidelity,
    mu_values: &[T],
    solver_dt: T,
    sample_every: usize,
    grid: TimeGrid<T>,
) -> Result<TimeParamDataset<T>> {
    let params = Array2::from_shape_vec((mu_values.len(), 1), mu_values.to_vec())
        .expect("parameter column");
    let eval = LvEvaluator { solver_dt, sample_every };
    let domain = vec![(T::of(LV_DOMAIN.0), T::of(LV_DOMAIN.1))];
    Ok(build_grid_dataset(fidelity, params, grid, domain, &eval)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rhs_vanishes_at_zero() {
        assert_eq!(lv_rhs([0.0, 0.0, 0.0], 2.0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rhs_matches_hand_evaluation() {
        let f = lv_rhs([0.5, 0.5, 0.5], 2.0);
        assert_abs_diff_eq!(f[0], 0.725, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(f[2], -0.825, epsilon = 1e-15);
        let f = lv_rhs([0.5, 0.5, 0.5], 1.0);
        assert_abs_diff_eq!(f[0], 0.225, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(f[2], -0.325, epsilon = 1e-15);
    }

    #[test]
    fn single_step_matches_hand_computed_midpoint() {
        let dt = 0.2;
        let cfg = LotkaVolterraConfig::new(2.0, dt, dt).unwrap();
        let traj = integrate_rk2(&cfg).unwrap();

        // Scalar midpoint step done with plain arithmetic.
        let y0 = [0.5, 0.5, 0.5];
        let k1 = [0.725, -0.95, -0.825];
        let mid = [y0[0] + 0.5 * dt * k1[0], y0[1] + 0.5 * dt * k1[1], y0[2] + 0.5 * dt * k1[2]];
        let k2 = [
            mid[0] * (2.0 - 0.1 * mid[0] - 0.5 * mid[1] - 0.5 * mid[2]),
            mid[1] * (-2.0 + 0.5 * mid[0] - 0.3 * mid[2]),
            mid[2] * (-2.0 + 0.2 * mid[0] + 0.5 * mid[1]),
        ];
        for i in 0..3 {
            assert_abs_diff_eq!(traj[[1, i]], y0[i] + dt * k2[i], epsilon = 1e-14);
        }
    }

    /// Error at the final time against a fine reference, used for Richardson
    /// self-convergence checks.
    fn endpoint_error(mu: f64, dt: f64, t_end: f64, reference: &[f64; 3]) -> f64 {
        let cfg = LotkaVolterraConfig::new(mu, dt, t_end).unwrap();
        let traj = integrate_rk2(&cfg).unwrap();
        let last = traj.row(traj.nrows() - 1);
        (0..3).map(|i| (last[i] - reference[i]).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn halving_the_step_quarters_the_error() {
        let t_end = 2.0;
        let reference_at = |mu: f64| -> [f64; 3] {
            let fine = LotkaVolterraConfig::new(mu, 1e-4, t_end).unwrap();
            let traj = integrate_rk2(&fine).unwrap();
            let r = traj.row(traj.nrows() - 1);
            [r[0], r[1], r[2]]
        };

        // The coarse pair from the worked example, on a horizon where
        // dt = 0.25 is still asymptotic.
        let reference = reference_at(2.0);
        let ratio =
            endpoint_error(2.0, 0.25, t_end, &reference) / endpoint_error(2.0, 0.125, t_end, &reference);
        assert!((3.4..=4.6).contains(&ratio), "coarse pair ratio {ratio}");

        // Order check across the parameter range on a finer pair.
        for mu in [1.0, 2.0, 3.0] {
            let reference = reference_at(mu);
            let ratio = endpoint_error(mu, 0.0625, t_end, &reference)
                / endpoint_error(mu, 0.03125, t_end, &reference);
            assert!((3.4..=4.6).contains(&ratio), "mu = {mu}: ratio {ratio}");
            let order = ratio.log2();
            assert!((1.8..=2.2).contains(&order), "mu = {mu}: order {order}");
        }
    }

    #[test]
    fn populations_stay_positive_at_fine_step() {
        for mu in [1.0, 2.0, 3.0] {
            let cfg = LotkaVolterraConfig::new(mu, 0.0025, 15.0).unwrap();
            let traj = integrate_rk2(&cfg).unwrap();
            assert!(traj.iter().all(|&v| v > 0.0), "mu = {mu}");
        }
    }

    #[test]
    fn fidelity_gap_grows_with_mu() {
        let grid = TimeGrid::new(0.0, 0.25, 61).unwrap();
        let lf = lv_dataset::<f64>(Fidelity::Low, &[1.0, 3.0], 0.25, 1, grid).unwrap();
        let hf = lv_dataset(Fidelity::High, &[1.0, 3.0], 0.0025, 100, grid).unwrap();
        let gap = |j: usize| -> f64 {
            let mut sup: f64 = 0.0;
            for n in 0..61 {
                for q in 0..3 {
                    sup = sup.max((lf.outputs()[[j, n, q]] - hf.outputs()[[j, n, q]]).abs());
                }
            }
            sup
        };
        assert!(gap(1) > gap(0), "gap at mu=3 ({}) should exceed mu=1 ({})", gap(1), gap(0));
    }

    #[test]
    fn outputs_are_deterministic() {
        let cfg = LotkaVolterraConfig::new(2.5, 0.25, 15.0).unwrap();
        assert_eq!(integrate_rk2(&cfg).unwrap(), integrate_rk2(&cfg).unwrap());
    }

    #[test]
    fn fractional_step_count_is_rejected() {
        assert!(LotkaVolterraConfig::new(2.0, 0.23, 15.0).is_err());
        assert!(LotkaVolterraConfig::new(0.5, 0.25, 15.0).is_err());
    }
}
