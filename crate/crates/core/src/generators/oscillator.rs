use crate::data::{build_grid_dataset, Fidelity, PointEvaluator, TimeGrid, TimeParamDataset};
use crate::generators::Result;
use crate::Scalar;
use ndarray::Array2;

/// Reynolds-like parameter domain.
pub const OSCILLATOR_DOMAIN: (f64, f64) = (70.0, 160.0);
/// Time window of the fully developed oscillation.
pub const OSCILLATOR_WINDOW: (f64, f64) = (14.5, 15.0);

/// Synthetic drag/lift-like pair: each component is
/// `a(mu) + b(mu) sin(omega(mu) t + phi)` with smooth monotone coefficients.
///
/// The low-fidelity variant applies a multiplicative amplitude bias, an
/// additive frequency error (accumulated from the window start), and a phase
/// shift, all growing linearly in `mu` and vanishing at `mu = 70` so the two
/// fidelities coincide there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OscillatorConfig {
    pub fidelity: Fidelity,
}

// Coefficient tables, with s = (mu - 70) / 90 in [0, 1]:
//   drag: mean 3.1 + 0.4 s, amplitude 0.08 + 0.07 s, phase 0.3 + 0.2 s
//   lift: mean 0.05 + 0.1 s, amplitude 0.6 + 0.5 s, phase 1.35 + 0.2 s
//   shared frequency 2 pi (2.5 + 2.5 s)
// LF bias: amplitude factor 1 + 0.25 s, frequency offset 0.8 s rad/time
// accumulated from t0, phase shift 0.5 s.
fn scaled<T: Scalar>(mu: T) -> T {
    (mu - T::of(OSCILLATOR_DOMAIN.0)) / T::of(OSCILLATOR_DOMAIN.1 - OSCILLATOR_DOMAIN.0)
}

/// Shared angular frequency `omega(mu)`.
pub fn oscillator_omega<T: Scalar>(mu: T) -> T {
    let s = scaled(mu);
    T::of(2.0 * std::f64::consts::PI) * (T::of(2.5) + T::of(2.5) * s)
}

/// Evaluate the (drag-like, lift-like) pair at `(mu, t)`.
pub fn oscillator_eval<T: Scalar>(fidelity: Fidelity, mu: T, t: T) -> [T; 2] {
    let s = scaled(mu);
    let omega = oscillator_omega(mu);
    let (amp_bias, freq_err, phase_shift) = match fidelity {
        Fidelity::High => (T::one(), T::zero(), T::zero()),
        _ => (T::one() + T::of(0.25) * s, T::of(0.8) * s, T::of(0.5) * s),
    };
    let drift = freq_err * (t - T::of(OSCILLATOR_WINDOW.0));
    let component = |mean: T, amp: T, phase: T| -> T {
        mean + amp_bias * amp * (omega * t + drift + phase + phase_shift).sin()
    };
    [
        component(T::of(3.1) + T::of(0.4) * s, T::of(0.08) + T::of(0.07) * s, T::of(0.3) + T::of(0.2) * s),
        component(T::of(0.05) + T::of(0.1) * s, T::of(0.6) + T::of(0.5) * s, T::of(1.35) + T::of(0.2) * s),
    ]
}

/// Tensor-product dataset of oscillator samples over `mu_values`.
pub fn oscillator_dataset<T: Scalar>(
    fidelity: Fidelity,
    mu_values: &[T],
    grid: TimeGrid<T>,
) -> Result<TimeParamDataset<T>> {
    let params = Array2::from_shape_vec((mu_values.len(), 1), mu_values.to_vec())
        .expect("parameter column");
    let eval = PointEvaluator::new(2, move |t: T, mu: ndarray::ArrayView1<T>| {
        Ok(oscillator_eval(fidelity, mu[0], t).to_vec())
    });
    let domain = vec![(T::of(OSCILLATOR_DOMAIN.0), T::of(OSCILLATOR_DOMAIN.1))];
    Ok(build_grid_dataset(fidelity, params, grid, domain, &eval)?)
}
