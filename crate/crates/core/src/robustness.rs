//! White-noise tolerance of a Bell violation with fixed measurements.
//!
//! `I((1-ε)ρ + ε 1/n)` is affine in `ε`, so the threshold has the closed form
//! `I_ρ / (I_ρ - I_noise)`. The bisection is kept as an independent check.

use serde::{Deserialize, Serialize};

use crate::bell::{behavior, build_analytic_measurements, evaluate, BellFunctional, MeasurementSet};
use crate::error::{Error, Result};
use crate::state::{build_counterexample_state, mix_with_white_noise, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// Violation of the unmixed state.
    pub violation: f64,
    /// Value of the functional on the maximally mixed state.
    pub noise_value: f64,
    /// Bisection estimate of the largest noise weight keeping `I > 0`.
    pub eps_star: f64,
    pub eps_closed_form: f64,
    pub bisection_steps: usize,
}

fn value_at(f: &BellFunctional, rho: &DensityMatrix, ma: &MeasurementSet, mb: &MeasurementSet, eps: f64) -> Result<f64> {
    evaluate(f, &behavior(&mix_with_white_noise(rho, eps)?, ma, mb)?)
}

/// Bisects for the noise weight at which the violation of `f` (against its
/// local bound) reaches zero.
pub fn noise_threshold(
    f: &BellFunctional,
    rho: &DensityMatrix,
    ma: &MeasurementSet,
    mb: &MeasurementSet,
) -> Result<RobustnessReport> {
    let shift = f.local_bound;
    let violation = value_at(f, rho, ma, mb, 0.0)? - shift;
    let noise_value = value_at(f, rho, ma, mb, 1.0)? - shift;
    if violation <= 0.0 {
        return Err(Error::Invalid(format!("state does not violate the functional (I - L = {violation:e})")));
    }
    if noise_value >= 0.0 {
        return Err(Error::Invalid(format!(
            "maximally mixed state does not satisfy the functional (I - L = {noise_value:e})"
        )));
    }
    let eps_closed_form = violation / (violation - noise_value);

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut steps = 0;
    while hi - lo > 1e-15 && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if value_at(f, rho, ma, mb, mid)? - shift > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(RobustnessReport {
        violation,
        noise_value,
        eps_star: 0.5 * (lo + hi),
        eps_closed_form,
        bisection_steps: steps,
    })
}

/// Threshold for the built-in functional, counterexample state and analytic
/// measurements.
pub fn analytic_noise_threshold() -> Result<RobustnessReport> {
    let (ma, mb) = build_analytic_measurements();
    noise_threshold(&BellFunctional::builtin_i(), &build_counterexample_state(), &ma, &mb)
}
