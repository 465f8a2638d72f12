//! Closed-form spectrum as a function of the coupling, with level crossings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{eigenvalue, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub g: f64,
    pub k: usize,
    pub n: usize,
    pub energy: f64,
}

/// Degeneracy `E_{k,n}(g*) = E_{k2,n2}(g*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub k: usize,
    pub n: usize,
    pub k2: usize,
    pub n2: usize,
    pub g_star: f64,
    pub energy: f64,
}

impl Crossing {
    pub fn delta_n(&self) -> usize {
        self.n.abs_diff(self.n2)
    }

    /// Both levels have the same phonon-number parity, so the drive, which
    /// conserves it, can couple them.
    pub fn same_parity(&self) -> bool {
        self.k % 2 == self.k2 % 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumTable {
    /// Ordered by `g`, then `n`, then `k`.
    pub rows: Vec<SpectrumRow>,
    /// Ordered by `g_star`.
    pub crossings: Vec<Crossing>,
}

/// Bisection tolerance on `g*`.
pub const CROSSING_TOL: f64 = 1e-12;

fn labels(k_max: usize, n_max: usize) -> Vec<(usize, usize)> {
    (0..=n_max)
        .flat_map(|n| (0..=k_max).map(move |k| (k, n)))
        .collect()
}

fn level(k: usize, n: usize, g: f64, base: &ModelParams) -> Result<f64> {
    let p = ModelParams { g, ..base.clone() };
    eigenvalue(k, n, &p)
}

/// `E_{k,n}(g)` on `g_values` for `k <= k_max`, `n <= n_max`, and every
/// sign change of a level difference between neighbouring grid points,
/// refined by bisection. Exact zeros at grid points are reported as such.
pub fn spectrum_sweep(
    p_base: &ModelParams,
    g_values: &[f64],
    k_max: usize,
    n_max: usize,
) -> Result<SpectrumTable> {
    if g_values.is_empty() {
        return Err(Error::InvalidParameter("empty g sweep".into()));
    }
    if g_values.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("g sweep".into()));
    }
    if g_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("g sweep must be strictly increasing".into()));
    }
    let labels = labels(k_max, n_max);
    let mut table = vec![vec![0.0; labels.len()]; g_values.len()];
    let mut rows = Vec::with_capacity(g_values.len() * labels.len());
    for (gi, &g) in g_values.iter().enumerate() {
        for (li, &(k, n)) in labels.iter().enumerate() {
            let e = level(k, n, g, p_base)?;
            table[gi][li] = e;
            rows.push(SpectrumRow { g, k, n, energy: e });
        }
    }

    let mut crossings = Vec::new();
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            let (ka, na) = labels[a];
            let (kb, nb) = labels[b];
            let diff = |gi: usize| table[gi][a] - table[gi][b];
            for gi in 0..g_values.len() {
                let d0 = diff(gi);
                if d0 == 0.0 {
                    crossings.push(Crossing {
                        k: ka,
                        n: na,
                        k2: kb,
                        n2: nb,
                        g_star: g_values[gi],
                        energy: table[gi][a],
                    });
                    continue;
                }
                if gi + 1 == g_values.len() {
                    continue;
                }
                let d1 = diff(gi + 1);
                if d1 != 0.0 && d0.signum() != d1.signum() {
                    let f = |g: f64| -> Result<f64> {
                        Ok(level(ka, na, g, p_base)? - level(kb, nb, g, p_base)?)
                    };
                    let g_star = bisect(f, g_values[gi], g_values[gi + 1], d0)?;
                    crossings.push(Crossing {
                        k: ka,
                        n: na,
                        k2: kb,
                        n2: nb,
                        g_star,
                        energy: level(ka, na, g_star, p_base)?,
                    });
                }
            }
        }
    }
    crossings.sort_by(|x, y| {
        x.g_star
            .total_cmp(&y.g_star)
            .then((x.n, x.k, x.n2, x.k2).cmp(&(y.n, y.k, y.n2, y.k2)))
    });
    Ok(SpectrumTable { rows, crossings })
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
    let s_lo = f_lo.signum();
    while hi - lo > CROSSING_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `g_points` evenly spaced couplings in `[g_min, g_max]`.
pub fn linspace(g_min: f64, g_max: f64, g_points: usize) -> Vec<f64> {
    match g_points {
        0 => Vec::new(),
        1 => vec![g_min],
        _ => (0..g_points)
            .map(|i| {
                if i + 1 == g_points {
                    g_max
                } else {
                    g_min + (g_max - g_min) * i as f64 / (g_points - 1) as f64
                }
            })
            .collect(),
    }
}
