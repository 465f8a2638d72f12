//! Hamiltonians of the quadratically coupled cavity/oscillator system and
//! their closed-form eigensystem.
//!
//! Energies are in units of the mechanical quantum and rates in units of the
//! mechanical frequency, which is fixed to 1. SI units appear only in
//! [`drive_amplitude`] and in the temperature to occupation conversion.

use serde::{Deserialize, Serialize};

use crate::dynamics::master::thermal_occupation;
use crate::error::{Error, Result};
use crate::hilbert::{
    destroy, expm_matrix, number, position_squared, tensor, CMatrix, HilbertSpec, Operator,
    StateVector, C64,
};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;
/// Mechanical frequency in internal units.
pub const OMEGA_M: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Cavity frequency.
    pub omega0: f64,
    /// Quadratic coupling.
    pub g: f64,
    /// Drive amplitude `E`.
    pub drive: f64,
    /// Drive frequency.
    pub omega_d: f64,
    /// Optical energy decay rate.
    pub gamma_o: f64,
    /// Mechanical energy decay rate.
    pub gamma_m: f64,
    /// Bath occupation; wins over `temperature` when both are set.
    pub nbar_m: Option<f64>,
    /// Bath temperature in kelvin.
    pub temperature: Option<f64>,
    /// Absolute mechanical angular frequency in rad/s, for `temperature`.
    pub omega_m_hz: Option<f64>,
    /// Input power in watts, informational.
    pub p_in: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega0: 2.0,
            g: 0.003,
            drive: 0.0,
            omega_d: 0.5,
            gamma_o: 0.1,
            gamma_m: 1e-7,
            nbar_m: Some(1000.0),
            temperature: None,
            omega_m_hz: None,
            p_in: None,
        }
    }
}

impl ModelParams {
    /// Undriven, dissipation-free system with coupling `g`.
    pub fn closed(g: f64) -> Self {
        Self {
            g,
            gamma_o: 0.0,
            gamma_m: 0.0,
            nbar_m: Some(0.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega0", self.omega0),
            ("g", self.g),
            ("drive", self.drive),
            ("omega_d", self.omega_d),
            ("gamma_o", self.gamma_o),
            ("gamma_m", self.gamma_m),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
        }
        for (name, v) in [("g", self.g), ("gamma_o", self.gamma_o), ("gamma_m", self.gamma_m)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be >= 0")));
            }
        }
        if let Some(n) = self.nbar_m {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::InvalidParameter(format!("nbar_m = {n}")));
            }
        }
        Ok(())
    }

    /// Thermal occupation of the mechanical bath: explicit `nbar_m`, else
    /// from `(temperature, omega_m_hz)`, else zero.
    pub fn thermal_nbar(&self) -> Result<f64> {
        if let Some(n) = self.nbar_m {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::InvalidParameter(format!("nbar_m = {n}")));
            }
            return Ok(n);
        }
        match (self.temperature, self.omega_m_hz) {
            (Some(t), Some(w)) => thermal_occupation(w, t),
            (Some(_), None) => Err(Error::InvalidParameter(
                "temperature given without omega_m_hz".into(),
            )),
            _ => Ok(0.0),
        }
    }

    /// Cavity detuning from the drive, `omega0 - omega_d`.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega_d
    }
}

/// Drive amplitude `E = sqrt(gamma_o P_in / (hbar omega_o))`, all in SI.
pub fn drive_amplitude(p_in: f64, gamma_o: f64, omega_o: f64) -> Result<f64> {
    for (name, v) in [("p_in", p_in), ("gamma_o", gamma_o), ("omega_o", omega_o)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name.into()));
        }
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be >= 0")));
        }
    }
    if omega_o == 0.0 {
        return Err(Error::InvalidParameter("omega_o = 0".into()));
    }
    Ok((gamma_o * p_in / (HBAR * omega_o)).sqrt())
}

/// Squeezing parameter of the dressed states in photon sector `n`:
/// `r(n) = atanh[(1 + 1/(2 g n))^-1] / 2`.
pub fn squeeze_param_r(n: usize, g: f64) -> Result<f64> {
    if !g.is_finite() {
        return Err(Error::NonFinite("g".into()));
    }
    if g < 0.0 {
        return Err(Error::InvalidParameter(format!("g = {g} must be >= 0")));
    }
    if n == 0 || g == 0.0 {
        return Ok(0.0);
    }
    let two_gn = 2.0 * g * n as f64;
    let x = two_gn / (OMEGA_M + two_gn);
    Ok(0.5 * x.atanh())
}

/// Oscillation frequency of the mechanics in photon sector `n`,
/// `sqrt(omega_m (omega_m + 4 g n))`.
pub fn sector_frequency(n: usize, g: f64) -> Result<f64> {
    let rad = OMEGA_M * (OMEGA_M + 4.0 * g * n as f64);
    if !rad.is_finite() {
        return Err(Error::NonFinite("g".into()));
    }
    if rad <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "omega_m + 4 g n = {rad} must be positive"
        )));
    }
    Ok(rad.sqrt())
}

/// Closed-form level `E_{k,n} = n omega0 - omega_m/2 + (k + 1/2) chi_n`.
pub fn eigenvalue(k: usize, n: usize, p: &ModelParams) -> Result<f64> {
    if !p.omega0.is_finite() {
        return Err(Error::NonFinite("omega0".into()));
    }
    let chi = sector_frequency(n, p.g)?;
    Ok(n as f64 * p.omega0 - 0.5 * OMEGA_M + (k as f64 + 0.5) * chi)
}

/// Largest `sinh^2|xi|` a squeeze on `n_mech` levels is trusted with.
pub fn squeeze_capacity(n_mech: usize) -> f64 {
    n_mech as f64 / 10.0
}

/// `S[xi] = exp[(xi^* b^2 - xi b^dag^2) / 2]` on `n_mech` levels, from the
/// exponential of the truncated generator.
pub fn squeeze_operator(xi: C64, n_mech: usize) -> Result<Operator> {
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return Err(Error::NonFinite("xi".into()));
    }
    let b = destroy(n_mech)?;
    let occupation = xi.norm().sinh().powi(2);
    if occupation > squeeze_capacity(n_mech) {
        return Err(Error::truncation(
            format!("squeeze |xi| = {:.6}", xi.norm()),
            format!(
                "sinh^2|xi| = {occupation:.4} exceeds n_mech/10 = {:.4}",
                squeeze_capacity(n_mech)
            ),
        ));
    }
    let b2 = b.matrix() * b.matrix();
    let bd2 = b2.adjoint();
    let gen: CMatrix = (b2 * xi.conj() - bd2 * xi) * C64::new(0.5, 0.0);
    Operator::new(expm_matrix(&gen)?)
}

/// Mechanical Hamiltonian of photon sector `n` in the frame rotating at the
/// cavity frequency: `omega_m b^dag b + g n (b + b^dag)^2`.
pub fn sector_hamiltonian(n: usize, g: f64, n_mech: usize) -> Result<Operator> {
    let nb = number(n_mech)?;
    let x2 = position_squared(n_mech)?;
    Ok(&nb.scale(C64::new(OMEGA_M, 0.0)) + &x2.scale(C64::new(g * n as f64, 0.0)))
}

struct FullOps {
    nb: Operator,
    na: Operator,
    x2_na: Operator,
}

fn full_ops(spec: &HilbertSpec) -> Result<FullOps> {
    let id_m = Operator::identity(spec.n_mech())?;
    let id_c = Operator::identity(spec.n_cav())?;
    let nb_m = number(spec.n_mech())?;
    let na_c = number(spec.n_cav())?;
    Ok(FullOps {
        nb: tensor(&nb_m, &id_c, spec)?,
        na: tensor(&id_m, &na_c, spec)?,
        x2_na: tensor(&position_squared(spec.n_mech())?, &na_c, spec)?,
    })
}

/// `H_Q = omega0 a^dag a + omega_m b^dag b + g a^dag a (b + b^dag)^2`.
pub fn build_h_q(p: &ModelParams, spec: &HilbertSpec) -> Result<Operator> {
    p.validate()?;
    build_number_conserving(p.omega0, p.g, spec)
}

/// `H_Q` with the cavity frequency replaced by `omega_cav`; with
/// `omega_cav = 0` this is the generator in the frame rotating at omega0.
pub fn build_number_conserving(omega_cav: f64, g: f64, spec: &HilbertSpec) -> Result<Operator> {
    let ops = full_ops(spec)?;
    let h = &(&ops.na.scale(C64::new(omega_cav, 0.0)) + &ops.nb.scale(C64::new(OMEGA_M, 0.0)))
        + &ops.x2_na.scale(C64::new(g, 0.0));
    Ok(h)
}

/// Driven Hamiltonian in the frame rotating at the drive frequency:
/// `Delta a^dag a + omega_m b^dag b + g a^dag a (b+b^dag)^2 + i E (a^dag - a)`.
pub fn build_h_rotating(p: &ModelParams, spec: &HilbertSpec) -> Result<Operator> {
    p.validate()?;
    let h0 = build_number_conserving(p.detuning(), p.g, spec)?;
    if p.drive == 0.0 {
        return Ok(h0);
    }
    let drive = drive_term(spec)?;
    Ok(&h0 + &drive.scale(C64::new(p.drive, 0.0)))
}

/// `i (a^dag - a)` on the composite space (Hermitian).
pub fn drive_term(spec: &HilbertSpec) -> Result<Operator> {
    let a = destroy(spec.n_cav())?;
    let gen = (a.matrix().adjoint() - a.matrix()) * C64::new(0.0, 1.0);
    let cav = Operator::hermitian(gen)?;
    tensor(&Operator::identity(spec.n_mech())?, &cav, spec)
}

/// Quantum numbers of a dressed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedLabel {
    /// Mechanical quantum number; the phonon number only when `n = 0`.
    pub k: usize,
    /// Photon number.
    pub n: usize,
    /// Squeezing parameter `r(n)`.
    pub r: f64,
}

impl DressedLabel {
    pub fn new(k: usize, n: usize, p: &ModelParams) -> Result<Self> {
        Ok(Self {
            k,
            n,
            r: squeeze_param_r(n, p.g)?,
        })
    }
}

/// Dressed eigenstate `S[r(n)] |k>_m |n>_c`.
pub fn dressed_state(k: usize, n: usize, p: &ModelParams, spec: &HilbertSpec) -> Result<StateVector> {
    if k >= spec.n_mech() || n >= spec.n_cav() {
        return Err(Error::LabelOutOfRange(format!(
            "(k, n) = ({k}, {n}) outside truncation (n_mech {}, n_cav {})",
            spec.n_mech(),
            spec.n_cav()
        )));
    }
    let r = squeeze_param_r(n, p.g)?;
    let mech = squeezed_number_state(k, C64::new(r, 0.0), spec.n_mech())?;
    let cav = StateVector::basis(spec.n_cav(), n)?;
    StateVector::product(&mech, &cav, spec)
}

/// Probability that the squeezed vacuum with `|xi| = r` has `n_mech` or more
/// phonons, summed from the closed-form even-number distribution
/// `P(2m) = tanh^{2m} r (2m)! / (4^m m!^2 cosh r)`.
pub fn squeezed_vacuum_tail(r: f64, n_mech: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let t2 = r.tanh().powi(2);
    let mut w = 1.0 / r.cosh();
    let mut tail = 0.0;
    let mut m = 0usize;
    loop {
        if 2 * m >= n_mech {
            tail += w;
            if w < 1e-18 * tail.max(1e-300) || w == 0.0 {
                break;
            }
        }
        w *= t2 * (2 * m + 1) as f64 / (2 * m + 2) as f64;
        m += 1;
        if m > 10_000_000 {
            break;
        }
    }
    tail
}

/// `S[xi] |k>` on `n_mech` levels. The squeeze precondition is tightened by
/// the `(2k + 1)` growth of the phonon number for number-state inputs.
pub fn squeezed_number_state(k: usize, xi: C64, n_mech: usize) -> Result<StateVector> {
    if k >= n_mech {
        return Err(Error::LabelOutOfRange(format!("k = {k} >= n_mech = {n_mech}")));
    }
    let mean = k as f64 + (2 * k + 1) as f64 * xi.norm().sinh().powi(2);
    if mean > squeeze_capacity(n_mech) && xi.norm() > 0.0 {
        return Err(Error::truncation(
            format!("squeezed number state k = {k}"),
            format!(
                "mean phonon number {mean:.4} exceeds n_mech/10 = {:.4}",
                squeeze_capacity(n_mech)
            ),
        ));
    }
    let s = squeeze_operator(xi, n_mech)?;
    Ok(StateVector::from_vector(s.matrix().column(k).into_owned()))
}
