//! Quasi-energies of the driven system, computed two ways.
//!
//! (a) Eigenvalues of the time-independent Hamiltonian in the frame rotating
//!     at the drive frequency, folded into `[0, omega_d)`.
//! (b) `-arg(lambda) / T` for the eigenvalues `lambda` of the one-period
//!     propagator of the lab-frame Hamiltonian
//!     `H_Q + i E (a^dag e^{-i omega_d t} - a e^{i omega_d t})`, `T = 2 pi / omega_d`.
//!
//! Both conserve the parity of the phonon number, so each parity sector is
//! treated separately. The one-period propagator is built from a sixth-order
//! symmetric composition of exact sub-flows: `exp(-i H_Q tau)` from the
//! photon-block spectral decomposition and the cavity-only drive exponential
//! with the drive phase frozen at the sub-step midpoint.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::spectrum::{spectrum_sweep, Crossing};
use crate::error::{Error, Result};
use crate::hilbert::{destroy, eigvalsh, expm_matrix, CMatrix, Eigh, HilbertSpec, C64, I};
use crate::model::{build_h_q, build_h_rotating, squeeze_operator, squeeze_param_r, ModelParams};

/// Eigenvalues of the one-period propagator closer than this on the unit
/// circle are flagged as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Required agreement of the two methods, modulo `omega_d`.
pub const METHOD_TOL: f64 = 1e-6;
/// Bracket width at which the gap search stops.
pub const GAP_SEARCH_TOL: f64 = 1e-10;

/// Yoshida's sixth-order triple composition weights (solution A).
const YOSHIDA6: [f64; 3] = [0.784513610477560, 0.235573213359357, -1.17767998417887];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloquetSweep {
    pub g_values: Vec<f64>,
    /// Labels whose undriven crossings are examined.
    pub k_max: usize,
    pub n_max: usize,
    /// Composition steps per drive period for method (b).
    pub steps_per_period: usize,
    /// Half-width in `g` of the window searched for the minimum gap.
    pub gap_window: f64,
    pub gap_points: usize,
}

impl Default for FloquetSweep {
    fn default() -> Self {
        Self {
            g_values: crate::dynamics::spectrum::linspace(0.0, 1.0, 11),
            k_max: 5,
            n_max: 3,
            steps_per_period: 2048,
            gap_window: 0.1,
            gap_points: 41,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuasiRow {
    pub g: f64,
    pub parity: usize,
    /// Eigenvalue of the rotating-frame Hamiltonian (unfolded).
    pub energy: f64,
    /// Method (a), folded into `[0, omega_d)`.
    pub eps_a: f64,
    /// Nearest method-(b) quasi-energy on the circle of circumference `omega_d`.
    pub eps_b: f64,
    pub deviation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapRecord {
    pub crossing: Crossing,
    pub delta_n: usize,
    pub same_parity: bool,
    /// Smallest driven separation of the two levels in the search window.
    /// Levels of opposite phonon parity are never coupled by the drive, so
    /// their separation is expected to vanish.
    pub gap: f64,
    pub g_at_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegeneracyFlag {
    pub g: f64,
    pub parity: usize,
    pub eps: f64,
    pub separation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloquetReport {
    pub rows: Vec<QuasiRow>,
    pub gaps: Vec<GapRecord>,
    pub max_method_deviation: f64,
    pub max_unitarity_defect: f64,
    pub degenerate: Vec<DegeneracyFlag>,
}

impl FloquetReport {
    pub fn methods_agree(&self) -> bool {
        self.max_method_deviation <= METHOD_TOL
    }
}

fn fold(x: f64, period: f64) -> f64 {
    let y = x - period * (x / period).floor();
    if y >= period {
        0.0
    } else {
        y
    }
}

fn circular_distance(x: f64, y: f64, period: f64) -> f64 {
    let d = fold(x - y, period);
    d.min(period - d)
}

fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Method (a): folded eigenvalues of the rotating-frame Hamiltonian in one
/// parity sector, with the unfolded values.
pub fn quasi_energies_rotating(
    p: &ModelParams,
    spec: &HilbertSpec,
    parity: usize,
) -> Result<Vec<(f64, f64)>> {
    check_drive(p)?;
    let h = build_h_rotating(p, spec)?;
    let idx = spec.parity_sector(parity);
    let mut out: Vec<(f64, f64)> = eigvalsh(&submatrix(h.matrix(), &idx))
        .into_iter()
        .map(|e| (e, fold(e, p.omega_d)))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

fn check_drive(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.drive < 0.0 {
        return Err(Error::InvalidParameter(format!("drive = {} must be >= 0", p.drive)));
    }
    if p.omega_d <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "omega_d = {} must be > 0",
            p.omega_d
        )));
    }
    Ok(())
}

/// One-period propagator of the lab-frame Hamiltonian in one parity sector.
pub fn period_propagator(
    p: &ModelParams,
    spec: &HilbertSpec,
    parity: usize,
    steps: usize,
) -> Result<CMatrix> {
    check_drive(p)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps_per_period = 0".into()));
    }
    let idx = spec.parity_sector(parity);
    let d = idx.len();
    let nc = spec.n_cav();
    let period = 2.0 * PI / p.omega_d;
    let h = period / steps as f64;

    // Sub-step fractions of one composition step.
    let w0 = 1.0 - 2.0 * YOSHIDA6.iter().sum::<f64>();
    let ws = [
        YOSHIDA6[2], YOSHIDA6[1], YOSHIDA6[0], w0, YOSHIDA6[0], YOSHIDA6[1], YOSHIDA6[2],
    ];
    // Drive midpoints and the merged free-flow durations between them.
    let mut mids = Vec::with_capacity(ws.len());
    let mut acc = 0.0;
    for w in ws {
        mids.push(acc + 0.5 * w);
        acc += w;
    }
    let inner: Vec<f64> = ws.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect();
    let edge = 0.5 * ws[0];

    let hq = build_h_q(p, spec)?;
    let eig = Eigh::new(&submatrix(hq.matrix(), &idx));
    let free = |tau: f64| eig.propagator(tau);
    let a_edge = free(edge * h);
    let a_join = free(2.0 * edge * h);
    let a_inner: Vec<CMatrix> = inner.iter().map(|&w| free(w * h)).collect();

    let a = destroy(nc)?;
    let vc: CMatrix = (a.matrix().adjoint() - a.matrix()) * I;
    let vs: CMatrix = a.matrix().adjoint() + a.matrix();
    let drive_flow = |t: f64, tau: f64| -> Result<CMatrix> {
        let (s, c) = (p.omega_d * t).sin_cos();
        let gen = (&vc * C64::new(c, 0.0) + &vs * C64::new(s, 0.0)) * C64::new(0.0, -tau * p.drive);
        expm_matrix(&gen)
    };
    let apply_drive = |u: &mut CMatrix, dm: &CMatrix| {
        let mut block = CMatrix::zeros(nc, d);
        for kk in 0..d / nc {
            let rows = u.rows(kk * nc, nc);
            dm.mul_to(&rows, &mut block);
            u.rows_mut(kk * nc, nc).copy_from(&block);
        }
    };

    let mut u = CMatrix::identity(d, d);
    let mut tmp = CMatrix::zeros(d, d);
    for step in 0..steps {
        let a_first = if step == 0 { &a_edge } else { &a_join };
        a_first.mul_to(&u, &mut tmp);
        std::mem::swap(&mut u, &mut tmp);
        for (i, &w) in ws.iter().enumerate() {
            let t = (step as f64 + mids[i]) * h;
            if p.drive != 0.0 {
                apply_drive(&mut u, &drive_flow(t, w * h)?);
            }
            if i + 1 < ws.len() {
                a_inner[i].mul_to(&u, &mut tmp);
                std::mem::swap(&mut u, &mut tmp);
            }
        }
    }
    a_edge.mul_to(&u, &mut tmp);
    Ok(tmp)
}

/// Eigenvalues of a unitary matrix from its complex Schur form.
pub fn unitary_eigenvalues(u: &CMatrix) -> Result<Vec<C64>> {
    let schur = nalgebra::linalg::Schur::try_new(u.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Method (b) in one parity sector: folded quasi-energies, ascending, and
/// the largest `| |lambda| - 1 |`.
pub fn quasi_energies_stroboscopic(
    p: &ModelParams,
    spec: &HilbertSpec,
    parity: usize,
    steps: usize,
) -> Result<(Vec<f64>, f64)> {
    let u = period_propagator(p, spec, parity, steps)?;
    let lambdas = unitary_eigenvalues(&u)?;
    let period = 2.0 * PI / p.omega_d;
    let defect = lambdas.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0, f64::max);
    let mut eps: Vec<f64> = lambdas
        .iter()
        .map(|l| fold(-l.arg() / period, p.omega_d))
        .collect();
    eps.sort_by(f64::total_cmp);
    Ok((eps, defect))
}

fn degeneracies(eps: &[f64], omega_d: f64, g: f64, parity: usize) -> Vec<DegeneracyFlag> {
    let period = 2.0 * PI / omega_d;
    let mut out = Vec::new();
    for i in 0..eps.len() {
        let j = (i + 1) % eps.len();
        if i == j {
            break;
        }
        // Chord length between neighbouring unit-circle eigenvalues.
        let sep = 2.0 * (0.5 * circular_distance(eps[i], eps[j], omega_d) * period).sin().abs();
        if sep < DEGENERACY_TOL {
            out.push(DegeneracyFlag {
                g,
                parity,
                eps: eps[i],
                separation: sep,
            });
        }
    }
    out
}

fn nearest(x: f64, set: &[f64], period: f64) -> (f64, f64) {
    set.iter()
        .map(|&y| (y, circular_distance(x, y, period)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((f64::NAN, f64::INFINITY))
}

/// Dressed state `|k, n>` restricted to a parity sector. It only labels
/// levels, so the number-state capacity check of [`dressed_state`] is skipped.
fn dressed_in_sector(
    k: usize,
    n: usize,
    p: &ModelParams,
    spec: &HilbertSpec,
    idx: &[usize],
) -> Result<Vec<C64>> {
    if k >= spec.n_mech() || n >= spec.n_cav() {
        return Err(Error::LabelOutOfRange(format!("(k, n) = ({k}, {n})")));
    }
    let r = squeeze_param_r(n, p.g)?;
    let s = squeeze_operator(C64::new(r, 0.0), spec.n_mech())?;
    Ok(idx
        .iter()
        .map(|&i| {
            let (km, nc) = spec.split(i);
            if nc == n {
                s.matrix()[(km, k)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect())
}

/// Separation of the driven levels continuing `|k,n>` and `|k2,n2>` at
/// coupling `g`. For equal phonon parities the pair is the two eigenvectors
/// with the most weight in `span{|k,n>, |k2,n2>}`, and the result is
/// non-negative. Otherwise each level is the eigenvector of its own parity
/// sector with the largest overlap, and the result is the signed difference
/// `E(k,n) - E(k2,n2)`.
pub fn pair_separation(c: &Crossing, g: f64, p: &ModelParams, spec: &HilbertSpec) -> Result<f64> {
    let pg = ModelParams { g, ..p.clone() };
    let h = build_h_rotating(&pg, spec)?;
    // Undriven dressed states in the rotating frame at the same coupling.
    let undriven = ModelParams {
        omega0: pg.detuning(),
        drive: 0.0,
        ..pg.clone()
    };
    let sector = |parity: usize| {
        let idx = spec.parity_sector(parity);
        let eig = Eigh::new(&submatrix(h.matrix(), &idx));
        (idx, eig)
    };
    let overlaps = |eig: &Eigh, d: &[C64]| -> Vec<f64> {
        (0..eig.values.len())
            .map(|col| {
                let v = eig.vectors.column(col);
                v.iter().zip(d).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
            })
            .collect()
    };
    let argmax = |w: &[f64]| {
        (0..w.len())
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
            .unwrap_or(0)
    };
    if c.same_parity() {
        let (idx, eig) = sector(c.k % 2);
        let w1 = overlaps(&eig, &dressed_in_sector(c.k, c.n, &undriven, spec, &idx)?);
        let w2 = overlaps(&eig, &dressed_in_sector(c.k2, c.n2, &undriven, spec, &idx)?);
        let mut order: Vec<usize> = (0..w1.len()).collect();
        order.sort_by(|&a, &b| (w2[b] + w1[b]).total_cmp(&(w1[a] + w2[a])));
        Ok((eig.values[order[0]] - eig.values[order[1]]).abs())
    } else {
        let (idx1, eig1) = sector(c.k % 2);
        let (idx2, eig2) = sector(c.k2 % 2);
        let w1 = overlaps(&eig1, &dressed_in_sector(c.k, c.n, &undriven, spec, &idx1)?);
        let w2 = overlaps(&eig2, &dressed_in_sector(c.k2, c.n2, &undriven, spec, &idx2)?);
        Ok(eig1.values[argmax(&w1)] - eig2.values[argmax(&w2)])
    }
}

/// Smallest `|pair_separation|` for `g` in `[lo, hi]`: the best of `points`
/// samples, refined by golden-section search between its neighbours.
pub fn minimum_gap(
    c: &Crossing,
    lo: f64,
    hi: f64,
    points: usize,
    p: &ModelParams,
    spec: &HilbertSpec,
) -> Result<(f64, f64)> {
    let f = |g: f64| pair_separation(c, g, p, spec).map(f64::abs);
    let grid = crate::dynamics::spectrum::linspace(lo, hi, points.max(2));
    let values = grid.iter().map(|&g| f(g)).collect::<Result<Vec<_>>>()?;
    let best = (0..grid.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let mut best_pt = (values[best], grid[best]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > GAP_SEARCH_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        }
        for (v, g) in [(f1, x1), (f2, x2)] {
            if v < best_pt.0 {
                best_pt = (v, g);
            }
        }
    }
    Ok(best_pt)
}

/// Quasi-energies at one coupling from both methods.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloquetSlice {
    pub rows: Vec<QuasiRow>,
    pub max_method_deviation: f64,
    pub max_unitarity_defect: f64,
    pub degenerate: Vec<DegeneracyFlag>,
}

/// Both methods at coupling `g` in both parity sectors. The deviation is
/// taken in both directions, so an unmatched quasi-energy of either method
/// shows up.
pub fn floquet_slice(p: &ModelParams, spec: &HilbertSpec, g: f64, steps: usize) -> Result<FloquetSlice> {
    check_drive(p)?;
    let pg = ModelParams { g, ..p.clone() };
    let mut out = FloquetSlice {
        rows: Vec::new(),
        max_method_deviation: 0.0,
        max_unitarity_defect: 0.0,
        degenerate: Vec::new(),
    };
    for parity in 0..2 {
        if spec.parity_sector(parity).is_empty() {
            continue;
        }
        let a = quasi_energies_rotating(&pg, spec, parity)?;
        let (b, defect) = quasi_energies_stroboscopic(&pg, spec, parity, steps)?;
        out.max_unitarity_defect = out.max_unitarity_defect.max(defect);
        out.degenerate.extend(degeneracies(&b, p.omega_d, g, parity));
        let a_folded: Vec<f64> = a.iter().map(|x| x.1).collect();
        for &(energy, eps_a) in &a {
            let (eps_b, dev) = nearest(eps_a, &b, p.omega_d);
            out.max_method_deviation = out.max_method_deviation.max(dev);
            out.rows.push(QuasiRow {
                g,
                parity,
                energy,
                eps_a,
                eps_b,
                deviation: dev,
            });
        }
        for &eb in &b {
            out.max_method_deviation = out.max_method_deviation.max(nearest(eb, &a_folded, p.omega_d).1);
        }
    }
    Ok(out)
}

/// Minimum driven gap near every crossing of the undriven rotating-frame
/// spectrum found on the sweep grid.
pub fn floquet_gaps(p: &ModelParams, spec: &HilbertSpec, sweep: &FloquetSweep) -> Result<Vec<GapRecord>> {
    check_drive(p)?;
    let undriven = ModelParams {
        omega0: p.detuning(),
        drive: 0.0,
        ..p.clone()
    };
    let table = spectrum_sweep(&undriven, &sweep.g_values, sweep.k_max, sweep.n_max)?;
    let g_lo = sweep.g_values.first().copied().unwrap_or(0.0);
    let g_hi = sweep.g_values.last().copied().unwrap_or(0.0);
    let mut gaps = Vec::with_capacity(table.crossings.len());
    for c in table.crossings {
        let lo = (c.g_star - sweep.gap_window).max(g_lo);
        let hi = (c.g_star + sweep.gap_window).min(g_hi);
        let (gap, g_at_min) = minimum_gap(&c, lo, hi, sweep.gap_points, p, spec)?;
        gaps.push(GapRecord {
            crossing: c,
            delta_n: c.delta_n(),
            same_parity: c.same_parity(),
            gap,
            g_at_min,
        });
    }
    Ok(gaps)
}

/// Merges per-coupling slices, in sweep order, with the gap list.
pub fn assemble_report(slices: Vec<FloquetSlice>, gaps: Vec<GapRecord>) -> FloquetReport {
    let mut report = FloquetReport {
        rows: Vec::new(),
        gaps,
        max_method_deviation: 0.0,
        max_unitarity_defect: 0.0,
        degenerate: Vec::new(),
    };
    for s in slices {
        report.rows.extend(s.rows);
        report.max_method_deviation = report.max_method_deviation.max(s.max_method_deviation);
        report.max_unitarity_defect = report.max_unitarity_defect.max(s.max_unitarity_defect);
        report.degenerate.extend(s.degenerate);
    }
    report
}

/// Quasi-energy table over the sweep, cross-checked between the two methods,
/// and minimum gaps near every undriven crossing of the rotating-frame
/// spectrum.
pub fn floquet_spectrum(
    p: &ModelParams,
    spec: &HilbertSpec,
    sweep: &FloquetSweep,
) -> Result<FloquetReport> {
    let slices = sweep
        .g_values
        .iter()
        .map(|&g| floquet_slice(p, spec, g, sweep.steps_per_period))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(slices, floquet_gaps(p, spec, sweep)?))
}
