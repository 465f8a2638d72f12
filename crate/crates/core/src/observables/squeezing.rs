//! Quadrature squeezing from second moments, and the orientation of the
//! squeezed vacua that make up the mechanical state.
//!
//! Quadratures are `X_theta = (b e^{-i theta} + b^dag e^{i theta}) / sqrt 2`,
//! so the vacuum variance is 1/2 and `r = 1.1513` is 10 dB.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::closed::poisson_weights;
use crate::dynamics::sector_phase;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64, ZERO};
use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqueezingReport {
    /// Angle of the least-noisy quadrature, in `[0, pi)`.
    pub theta_min: f64,
    pub v_min: f64,
    /// `-10 log10(v_min / 0.5)`; positive iff squeezed below the vacuum.
    pub db: f64,
}

/// Minimum of `v(theta) = 1/2 + N + Re(M e^{-2i theta})` with
/// `N = <b^dag b> - |<b>|^2` and `M = <b^2> - <b>^2`, attained at
/// `v_min = 1/2 + N - |M|`.
pub fn squeezing_report(rho_m: &DensityMatrix) -> SqueezingReport {
    let rho = rho_m.matrix();
    let dim = rho_m.dim();
    let (mut b, mut b2, mut nb) = (ZERO, ZERO, 0.0);
    for k in 1..dim {
        let kf = k as f64;
        b += rho[(k, k - 1)] * kf.sqrt();
        nb += kf * rho[(k, k)].re;
        if k >= 2 {
            b2 += rho[(k, k - 2)] * (kf * (kf - 1.0)).sqrt();
        }
    }
    let n = nb - b.norm_sqr();
    let m = b2 - b * b;
    let v_min = 0.5 + n - m.norm();
    let theta_min = if m.norm() == 0.0 {
        0.0
    } else {
        (0.5 * (m.arg() + PI)).rem_euclid(PI)
    };
    SqueezingReport {
        theta_min,
        v_min,
        db: -10.0 * (v_min / 0.5).log10(),
    }
}

/// One photon sector's squeezed vacuum `S[xi(n,t)] |0>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectorLobe {
    pub n: usize,
    pub weight: f64,
    /// `|xi|`.
    pub magnitude: f64,
    /// Squeezed-quadrature angle `arg(xi) / 2`, in `[0, pi)`.
    pub orientation: f64,
}

/// Sector lobes of the closed-form state with `|alpha|^2 = mu` whose weight
/// is at least `min_rel_weight` of the largest one. Unsqueezed sectors have
/// no orientation and are left out.
pub fn sector_lobes(mu: f64, t: f64, p: &ModelParams, min_rel_weight: f64) -> Result<Vec<SectorLobe>> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("|alpha|^2 = {mu}")));
    }
    if !(0.0..=1.0).contains(&min_rel_weight) {
        return Err(Error::InvalidParameter(format!(
            "relative weight threshold {min_rel_weight} outside [0, 1]"
        )));
    }
    // Enough sectors to hold all but a negligible part of the distribution.
    let len = (mu + 12.0 * mu.sqrt() + 20.0).ceil() as usize;
    let weights = poisson_weights(mu, len);
    let w_max = weights.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for (n, &w) in weights.iter().enumerate() {
        if w < min_rel_weight * w_max || w == 0.0 {
            continue;
        }
        let xi: C64 = sector_phase(n, t, p)?.xi;
        if xi.norm() < 1e-12 {
            continue;
        }
        out.push(SectorLobe {
            n,
            weight: w,
            magnitude: xi.norm(),
            orientation: (0.5 * xi.arg()).rem_euclid(PI),
        });
    }
    Ok(out)
}

/// Sectors sharing a principal axis to within the clustering resolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeCluster {
    /// Weighted circular mean of the member orientations, in `[0, pi)`.
    pub orientation: f64,
    pub magnitude: f64,
    pub weight: f64,
    pub sectors: Vec<usize>,
}

/// Groups lobes whose orientations (mod pi) lie within `resolution` of the
/// first member of their group. Orientations are cut at the widest empty arc
/// so that no group straddles the wrap-around.
pub fn cluster_lobes(lobes: &[SectorLobe], resolution: f64) -> Result<Vec<LobeCluster>> {
    if !(resolution > 0.0 && resolution < PI) {
        return Err(Error::InvalidParameter(format!("resolution {resolution} outside (0, pi)")));
    }
    if lobes.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<SectorLobe> = lobes.to_vec();
    sorted.sort_by(|a, b| a.orientation.total_cmp(&b.orientation));
    let m = sorted.len();
    let mut cut = 0;
    let mut widest = -1.0;
    for i in 0..m {
        let next = sorted[(i + 1) % m].orientation + if i + 1 == m { PI } else { 0.0 };
        let gap = next - sorted[i].orientation;
        if gap > widest {
            widest = gap;
            cut = (i + 1) % m;
        }
    }
    sorted.rotate_left(cut);
    // Unwrap so orientations increase across the cut.
    let base = sorted[0].orientation;
    let unwrapped: Vec<f64> = sorted
        .iter()
        .map(|l| base + (l.orientation - base).rem_euclid(PI))
        .collect();

    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=m {
        if i == m || unwrapped[i] - unwrapped[start] > resolution {
            clusters.push(summarize(&sorted[start..i], &unwrapped[start..i]));
            start = i;
        }
    }
    Ok(clusters)
}

fn summarize(lobes: &[SectorLobe], angles: &[f64]) -> LobeCluster {
    let weight: f64 = lobes.iter().map(|l| l.weight).sum();
    let mean = |f: &dyn Fn(usize) -> f64| {
        (0..lobes.len()).map(|i| lobes[i].weight * f(i)).sum::<f64>() / weight
    };
    let mut sectors: Vec<usize> = lobes.iter().map(|l| l.n).collect();
    sectors.sort_unstable();
    LobeCluster {
        orientation: mean(&|i| angles[i]).rem_euclid(PI),
        magnitude: mean(&|i| lobes[i].magnitude),
        weight,
        sectors,
    }
}
