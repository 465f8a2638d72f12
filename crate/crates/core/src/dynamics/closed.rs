//! Unitary evolution: the closed-form state for a coherent cavity field and
//! a numerical Schrodinger propagator used to check it.

use serde::Serialize;

use crate::dynamics::sector::sector_phase;
use crate::error::{Error, Result};
use crate::hilbert::{CVector, Eigh, HilbertSpec, Operator, StateVector, C64, ZERO};
use crate::model::{squeezed_number_state, squeezed_vacuum_tail, ModelParams};

/// Largest discarded probability tolerated by [`analytic_state`].
pub const TRUNCATION_MASS_TOL: f64 = 1e-10;
/// Sectors whose Poisson weight is below this are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::NonFinite("time grid".into()));
        }
        if t_end <= t_start {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} must exceed t_start = {t_start}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps = 0".into()));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// The `n_steps + 1` sample times, endpoints included.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps)
            .map(|i| {
                if i == self.n_steps {
                    self.t_end
                } else {
                    self.t_start + dt * i as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub integrator: String,
    pub step: Option<f64>,
    pub params: Option<ModelParams>,
    pub spec: Option<HilbertSpec>,
    /// Largest `|norm - 1|` (states) or `|trace - 1|` (density matrices).
    pub max_norm_drift: f64,
    /// Largest anti-Hermitian part removed by symmetrization.
    pub max_hermiticity_correction: f64,
    pub min_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub meta: TrajectoryMeta,
}

/// `ln n!` for `n = 0..len`.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Poisson weights `e^{-mu} mu^n / n!` for `n < len`.
pub fn poisson_weights(mu: f64, len: usize) -> Vec<f64> {
    if mu == 0.0 {
        let mut w = vec![0.0; len];
        if len > 0 {
            w[0] = 1.0;
        }
        return w;
    }
    let lnf = ln_factorials(len);
    (0..len)
        .map(|n| (-mu + n as f64 * mu.ln() - lnf[n]).exp())
        .collect()
}

/// Poisson probability of `n >= from`.
pub fn poisson_tail(mu: f64, from: usize) -> f64 {
    if mu == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    if (from as f64) <= mu {
        let head: f64 = poisson_weights(mu, from).iter().sum();
        return (1.0 - head).max(0.0);
    }
    // Terms decrease monotonically beyond the mean.
    let mut ln_w = -mu + from as f64 * mu.ln() - ln_factorials(from + 1)[from];
    let mut tail = 0.0;
    let mut n = from;
    loop {
        let w = ln_w.exp();
        tail += w;
        if w <= 1e-18 * tail || w == 0.0 {
            return tail;
        }
        n += 1;
        ln_w += mu.ln() - (n as f64).ln();
    }
}

/// Closed-form state at time `t` for the initial state `|0>_m |alpha>_c`,
/// in the frame rotating at the cavity frequency:
/// `sum_n c(n,t) S[xi(n,t)] |0>_m |n>_c` with
/// `c(n,t) = alpha^n e^{-|alpha|^2/2} e^{i (t + eta_n)/2} / sqrt(n!)`.
///
/// The discarded probability (photon tail beyond `n_cav` plus Poisson-weighted
/// phonon tails beyond `n_mech`) must stay below [`TRUNCATION_MASS_TOL`].
pub fn analytic_state(t: f64, alpha: C64, p: &ModelParams, spec: &HilbertSpec) -> Result<StateVector> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("alpha".into()));
    }
    let mu = alpha.norm_sqr();
    let photon_tail = poisson_tail(mu, spec.n_cav());
    if photon_tail > TRUNCATION_MASS_TOL {
        return Err(Error::truncation(
            format!("photon number >= {}", spec.n_cav()),
            format!("Poisson tail {photon_tail:.3e} for |alpha|^2 = {mu}"),
        ));
    }
    let weights = poisson_weights(mu, spec.n_cav());
    let phase_alpha = alpha.arg();

    let mut phonon_loss = 0.0;
    let mut worst = (0usize, 0.0f64);
    let mut amp = CVector::from_element(spec.dim(), ZERO);
    for (n, &w) in weights.iter().enumerate() {
        if w < NEGLIGIBLE_WEIGHT {
            continue;
        }
        let ph = sector_phase(n, t, p)?;
        let loss = w * squeezed_vacuum_tail(ph.xi.norm(), spec.n_mech());
        phonon_loss += loss;
        if loss > worst.1 {
            worst = (n, loss);
        }
        let mech = squeezed_number_state(0, ph.xi, spec.n_mech()).map_err(|e| match e {
            Error::TruncationInsufficient { detail, .. } => {
                Error::truncation(format!("photon sector n = {n}"), detail)
            }
            other => other,
        })?;
        let c = C64::from_polar(w.sqrt(), n as f64 * phase_alpha + 0.5 * (t + ph.eta));
        for k in 0..spec.n_mech() {
            amp[spec.index(k, n)] = c * mech.amplitudes()[k];
        }
    }
    if phonon_loss > TRUNCATION_MASS_TOL {
        return Err(Error::truncation(
            format!("photon sector n = {}", worst.0),
            format!(
                "squeezed vacuum leaks {phonon_loss:.3e} of the norm beyond n_mech = {}",
                spec.n_mech()
            ),
        ));
    }
    Ok(StateVector::from_vector(amp))
}

/// [`analytic_state`] on every grid time.
pub fn analytic_trajectory(
    grid: &TimeGrid,
    alpha: C64,
    p: &ModelParams,
    spec: &HilbertSpec,
) -> Result<Trajectory<StateVector>> {
    let times = grid.times();
    let states = times
        .iter()
        .map(|&t| analytic_state(t, alpha, p, spec))
        .collect::<Result<Vec<_>>>()?;
    let max_norm_drift = states
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            integrator: "closed-form".into(),
            params: Some(p.clone()),
            spec: Some(*spec),
            max_norm_drift,
            ..Default::default()
        },
    })
}

/// Whether `h` has no matrix elements between different photon numbers.
pub fn conserves_photon_number(h: &Operator, spec: &HilbertSpec) -> bool {
    let m = h.matrix();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    for j in 0..m.ncols() {
        let nj = spec.split(j).1;
        for i in 0..m.nrows() {
            if spec.split(i).1 != nj && m[(i, j)].norm() > tol {
                return false;
            }
        }
    }
    true
}

/// `exp(-i H t) psi0` sampled on `grid`, from exact spectral decompositions:
/// one per photon block when `H` conserves photon number, otherwise one of
/// the full matrix.
pub fn evolve_closed_numeric(
    psi0: &StateVector,
    grid: &TimeGrid,
    h: &Operator,
    spec: &HilbertSpec,
) -> Result<Trajectory<StateVector>> {
    spec.check_dim(h.dim())?;
    spec.check_dim(psi0.dim())?;
    let dev = h.hermiticity_deviation();
    let scale = h.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > crate::hilbert::HERMITIAN_REL_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let times = grid.times();
    let norm0 = psi0.norm();

    let (integrator, states) = if conserves_photon_number(h, spec) {
        let blocks: Vec<(Vec<usize>, Eigh)> = (0..spec.n_cav())
            .map(|n| {
                let idx = spec.photon_block(n);
                let hb = h.restrict(&idx)?;
                Ok((idx, Eigh::new(hb.matrix())))
            })
            .collect::<Result<_>>()?;
        let states = times
            .iter()
            .map(|&t| {
                let mut out = CVector::from_element(spec.dim(), ZERO);
                for (idx, eig) in &blocks {
                    let v = CVector::from_iterator(
                        idx.len(),
                        idx.iter().map(|&i| psi0.amplitudes()[i]),
                    );
                    let w = eig.evolve(&v, t);
                    for (a, &i) in idx.iter().enumerate() {
                        out[i] = w[a];
                    }
                }
                StateVector::from_vector(out)
            })
            .collect::<Vec<_>>();
        ("photon-block eigendecomposition", states)
    } else {
        let eig = Eigh::new(h.matrix());
        let states = times
            .iter()
            .map(|&t| StateVector::from_vector(eig.evolve(psi0.amplitudes(), t)))
            .collect();
        ("full eigendecomposition", states)
    };

    let max_norm_drift = states
        .iter()
        .map(|s: &StateVector| (s.norm() - norm0).abs())
        .fold(0.0, f64::max);
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            integrator: integrator.into(),
            spec: Some(*spec),
            max_norm_drift,
            ..Default::default()
        },
    })
}
