//! Diagnostics of the mechanical mode: phonon statistics, the reduced state,
//! entanglement with the cavity, quadrature squeezing and the Wigner function.

mod squeezing;
mod wigner;

pub use squeezing::{cluster_lobes, sector_lobes, squeezing_report, LobeCluster, SectorLobe, SqueezingReport};
pub use wigner::{axis, covering_axes, wigner, WignerEvaluator, WignerField, MASS_TOL};

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace_cavity, CMatrix, DensityMatrix, HilbertSpec, StateVector, ZERO};
use crate::model::{squeeze_param_r, ModelParams};

/// Means at or below this are treated as the vacuum by [`mandel_q`].
pub const MANDEL_ZERO_MEAN: f64 = 1e-24;
/// Reduced-state eigenvalues below this do not enter the entropy.
pub const ENTROPY_EIGEN_FLOOR: f64 = 1e-14;
/// Projections less likely than this are refused.
pub const MIN_PROBABILITY: f64 = 1e-14;
/// Allowed `|norm - 1|` for inputs that must be normalized.
pub const NORM_TOL: f64 = 1e-8;

/// `(<b^dag b>, <(b^dag b)^2>)` in the dressed state `S[r(n)] |k> |n>`.
pub fn phonon_moments_eigenstate(k: usize, n: usize, p: &ModelParams) -> Result<(f64, f64)> {
    let r = squeeze_param_r(n, p.g)?;
    Ok(squeezed_number_moments(k, r))
}

/// Phonon moments of `S[r] |k>`.
pub fn squeezed_number_moments(k: usize, r: f64) -> (f64, f64) {
    let k = k as f64;
    let mean = k + (2.0 * k + 1.0) * r.sinh().powi(2);
    let second = mean * mean + (k * k + k + 1.0) * (2.0 * r).sinh().powi(2) / 2.0;
    (mean, second)
}

/// `Q = Var(N) / <N> - 1`, set to `-1` for the vacuum. The limit of a weakly
/// squeezed vacuum is `+1`, so `Q` is discontinuous at `<N> = 0`.
pub fn mandel_q(mean: f64, second: f64) -> f64 {
    if mean <= MANDEL_ZERO_MEAN {
        return -1.0;
    }
    (second - mean * mean) / mean - 1.0
}

/// Squeezing of `|k>` at which the phonon statistics become Poissonian.
pub fn poissonian_r(k: usize) -> f64 {
    let k = k as f64;
    let root = (4.0 * k.powi(4) + 8.0 * k.powi(3) + 12.0 * k * k + 8.0 * k + 1.0).sqrt();
    let sinh2 = (root - (2.0 * k * k + 1.0)) / (4.0 * (k * k + k + 1.0));
    sinh2.max(0.0).sqrt().asinh()
}

/// States of the composite system that have a mechanical reduced state.
pub trait Bipartite {
    fn reduce_to_mech(&self, spec: &HilbertSpec) -> Result<DensityMatrix>;
}

impl Bipartite for StateVector {
    fn reduce_to_mech(&self, spec: &HilbertSpec) -> Result<DensityMatrix> {
        spec.check_dim(self.dim())?;
        let psi = amplitude_matrix(self, spec);
        Ok(DensityMatrix::from_matrix_unchecked(&psi * psi.adjoint()))
    }
}

impl Bipartite for DensityMatrix {
    fn reduce_to_mech(&self, spec: &HilbertSpec) -> Result<DensityMatrix> {
        partial_trace_cavity(self, spec)
    }
}

/// `Tr_c rho`. The result is as valid as the input; it is not re-checked.
pub fn reduced_mech_state<S: Bipartite>(state: &S, spec: &HilbertSpec) -> Result<DensityMatrix> {
    state.reduce_to_mech(spec)
}

/// `psi` as an `n_mech x n_cav` matrix.
fn amplitude_matrix(psi: &StateVector, spec: &HilbertSpec) -> CMatrix {
    let a = psi.amplitudes();
    CMatrix::from_fn(spec.n_mech(), spec.n_cav(), |k, n| a[spec.index(k, n)])
}

/// `(<N>, <N^2>)` of a mechanical density matrix, read off its diagonal.
pub fn phonon_moments(rho_m: &DensityMatrix) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for k in 0..rho_m.dim() {
        let pk = rho_m.matrix()[(k, k)].re;
        mean += k as f64 * pk;
        second += (k * k) as f64 * pk;
    }
    (mean, second)
}

/// Phonon moments of a composite pure state. Sums `|psi_kn|^2` directly, so
/// tiny means keep full relative precision.
pub fn phonon_moments_pure(psi: &StateVector, spec: &HilbertSpec) -> Result<(f64, f64)> {
    spec.check_dim(psi.dim())?;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (i, z) in psi.amplitudes().iter().enumerate() {
        let k = spec.split(i).0 as f64;
        let w = z.norm_sqr();
        mean += k * w;
        second += k * k * w;
    }
    Ok((mean, second))
}

fn check_normalized(psi: &StateVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// Schmidt coefficients squared, descending.
pub fn schmidt_weights(psi: &StateVector, spec: &HilbertSpec) -> Result<Vec<f64>> {
    spec.check_dim(psi.dim())?;
    // Singular values resolve small weights far better than eigenvalues of
    // the reduced state, whose absolute error is set by its largest entry.
    let svd = amplitude_matrix(psi, spec).svd(false, false);
    let mut w: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    Ok(w)
}

/// Von Neumann entropy of the mechanical reduced state, in nats.
pub fn entanglement_entropy(psi: &StateVector, spec: &HilbertSpec) -> Result<f64> {
    check_normalized(psi)?;
    // Renormalized, so a product state in a truncated space gives exactly 0.
    let w = schmidt_weights(psi, spec)?;
    let total: f64 = w.iter().sum();
    let s = w
        .into_iter()
        .map(|l| l / total)
        .filter(|&l| l >= ENTROPY_EIGEN_FLOOR)
        .map(|l| -l * l.ln())
        .sum::<f64>();
    Ok(s.max(0.0))
}

/// Projects the cavity onto `|n>` and returns the normalized mechanical
/// state with the outcome probability.
pub fn condition_on_photon_number(
    psi: &StateVector,
    n: usize,
    spec: &HilbertSpec,
) -> Result<(StateVector, f64)> {
    spec.check_dim(psi.dim())?;
    check_normalized(psi)?;
    if n >= spec.n_cav() {
        return Err(Error::LabelOutOfRange(format!(
            "photon number {n} >= n_cav = {}",
            spec.n_cav()
        )));
    }
    let mut mech = crate::hilbert::CVector::from_element(spec.n_mech(), ZERO);
    for k in 0..spec.n_mech() {
        mech[k] = psi.amplitudes()[spec.index(k, n)];
    }
    let prob = mech.norm_squared();
    if prob < MIN_PROBABILITY {
        return Err(Error::ZeroProbability(prob));
    }
    mech.unscale_mut(prob.sqrt());
    Ok((StateVector::from_vector(mech), prob))
}
