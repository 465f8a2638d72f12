//! Disentangled propagator of one photon-number sector.
//!
//! In the frame rotating at the cavity frequency, photon sector `n` evolves
//! the mechanics under `b^dag b + g n (b + b^dag)^2`, whose propagator
//! factorizes as `e^{it/2} S[xi] e^{i eta (b^dag b + 1/2)}`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, Operator, C64};
use crate::model::{sector_frequency, squeeze_operator, ModelParams, OMEGA_M};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorPhase {
    pub n: usize,
    /// `2 g n`.
    pub r_n: f64,
    /// `sqrt(1 + 4 g n)`.
    pub chi_n: f64,
    /// `-2 (1 + 2 g n)`.
    pub p_n: f64,
    /// Real phase, continuous in `t` with `eta(0) = 0`.
    pub eta: f64,
    pub xi: C64,
}

/// Unwrapped angle of `cos(theta) + i c sin(theta)` with value 0 at
/// `theta = 0`. `c` must be non-zero.
fn unwrapped_angle(theta: f64, c: f64) -> f64 {
    let s = c.signum();
    let (sin, cos) = theta.sin_cos();
    // Rotating by -s*theta leaves a point in the right half-plane.
    let delta = (sin * cos * (c - s)).atan2(cos * cos + c.abs() * sin * sin);
    s * theta + delta
}

pub fn sector_phase(n: usize, t: f64, p: &ModelParams) -> Result<SectorPhase> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t".into()));
    }
    if !p.g.is_finite() {
        return Err(Error::NonFinite("g".into()));
    }
    let gn = p.g * n as f64;
    let r_n = 2.0 * gn;
    let chi_n = sector_frequency(n, p.g)?;
    let p_n = -2.0 * (OMEGA_M + 2.0 * gn);
    let theta = chi_n * t;
    let eta = unwrapped_angle(theta, p_n / (2.0 * chi_n));
    let mag = (r_n * theta.sin() / chi_n).asinh();
    let xi = C64::from_polar(1.0, eta + FRAC_PI_2) * mag;
    Ok(SectorPhase {
        n,
        r_n,
        chi_n,
        p_n,
        eta,
        xi,
    })
}

/// Largest squeezing magnitude reached in sector `n`, `asinh(r_n / chi_n)`.
pub fn max_squeeze(n: usize, g: f64) -> Result<f64> {
    let chi = sector_frequency(n, g)?;
    Ok((2.0 * g * n as f64 / chi).asinh())
}

/// First time at which sector `n` reaches [`max_squeeze`], `pi / (2 chi_n)`.
pub fn optimal_time(n: usize, g: f64) -> Result<f64> {
    Ok(FRAC_PI_2 / sector_frequency(n, g)?)
}

/// Mechanical propagator of sector `n` assembled from its disentangled form.
pub fn sector_propagator(n: usize, t: f64, p: &ModelParams, n_mech: usize) -> Result<Operator> {
    let ph = sector_phase(n, t, p)?;
    let s = squeeze_operator(ph.xi, n_mech)?;
    let mut m: CMatrix = s.into_matrix();
    for k in 0..n_mech {
        let phase = C64::from_polar(1.0, 0.5 * t + ph.eta * (k as f64 + 0.5));
        for z in m.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    Operator::new(m)
}
