//! Truncation check: recompute with a larger phonon space and compare.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpec;

/// Default enlargement of `n_mech`.
pub const DEFAULT_SCALE: f64 = 1.5;
/// Largest accepted relative drift.
pub const DRIFT_TOL: f64 = 1e-6;
/// Observables smaller than this in magnitude are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_mech: usize,
    pub n_mech_scaled: usize,
    pub max_relative_drift: f64,
    /// Position of the worst observable.
    pub worst_index: Option<usize>,
    pub passed: bool,
}

/// Largest `|a - b| / max(|a|, |b|, ABS_FLOOR)` over paired observables.
pub fn relative_drift(base: &[f64], scaled: &[f64]) -> Result<(f64, Option<usize>)> {
    if base.len() != scaled.len() {
        return Err(Error::DimensionMismatch {
            expected: base.len(),
            found: scaled.len(),
        });
    }
    let mut worst = (0.0f64, None);
    for (i, (a, b)) in base.iter().zip(scaled).enumerate() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite(format!("observable {i}")));
        }
        let d = (a - b).abs() / a.abs().max(b.abs()).max(ABS_FLOOR);
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some(i));
        }
    }
    Ok(worst)
}

/// Runs `observe` on `spec` and on `spec` with `n_mech` scaled by `scale`.
/// Returns the baseline observables and the comparison.
pub fn check_convergence<F>(spec: &HilbertSpec, scale: f64, observe: F) -> Result<(Vec<f64>, ConvergenceReport)>
where
    F: Fn(&HilbertSpec) -> Result<Vec<f64>>,
{
    if !(scale.is_finite() && scale > 1.0) {
        return Err(Error::InvalidParameter(format!("n_mech scale {scale} must exceed 1")));
    }
    let bigger = spec.scale_mech(scale)?;
    let base = observe(spec)?;
    let scaled = observe(&bigger)?;
    let (drift, worst_index) = relative_drift(&base, &scaled)?;
    Ok((
        base,
        ConvergenceReport {
            n_mech: spec.n_mech(),
            n_mech_scaled: bigger.n_mech(),
            max_relative_drift: drift,
            worst_index,
            passed: drift < DRIFT_TOL,
        },
    ))
}
