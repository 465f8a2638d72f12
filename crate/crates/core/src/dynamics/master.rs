//! Lindblad master equation in the frame rotating at the cavity frequency:
//!
//! `d rho/dt = -i[H, rho] + gamma_o D[a] + gamma_m (nbar + 1) D[b] + gamma_m nbar D[b^dag]`
//!
//! with `D[c] rho = c rho c^dag - {c^dag c, rho} / 2`. The density matrix is
//! vectorized row-major, `vec(rho)[i * dim + j] = rho[i, j]`.

use std::collections::VecDeque;

use crate::dynamics::closed::{TimeGrid, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::hilbert::{
    destroy, tensor, CMatrix, DensityMatrix, HilbertSpec, Operator, C64, I, ZERO,
};
use crate::model::{build_number_conserving, sector_frequency, ModelParams, HBAR, K_B};
use crate::sparse::{CsrMatrix, Triplets};

/// `h * omega_max` above which a step is refused.
pub const MAX_STEP_PRODUCT: f64 = 0.05;
/// Default step ceiling.
pub const MAX_STEP: f64 = 0.01;
/// Eigenvalues below this raise a positivity warning.
pub const POSITIVITY_WARN: f64 = -1e-5;

/// Bose occupation `1 / (exp(hbar omega / k_B T) - 1)`; `omega` in rad/s.
/// `T = 0` gives 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega.is_finite() && temperature.is_finite()) {
        return Err(Error::NonFinite("omega or temperature".into()));
    }
    if temperature < 0.0 {
        return Err(Error::InvalidParameter(format!("temperature = {temperature} < 0")));
    }
    if omega <= 0.0 {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be > 0")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega / (K_B * temperature)).exp_m1())
}

/// Jump operators with their rates.
#[derive(Clone, Debug)]
pub struct Dissipators {
    pub jumps: Vec<(f64, Operator)>,
}

impl Dissipators {
    pub fn new(p: &ModelParams, spec: &HilbertSpec) -> Result<Self> {
        p.validate()?;
        let nbar = p.thermal_nbar()?;
        let a = tensor(
            &Operator::identity(spec.n_mech())?,
            &destroy(spec.n_cav())?,
            spec,
        )?;
        let b = tensor(
            &destroy(spec.n_mech())?,
            &Operator::identity(spec.n_cav())?,
            spec,
        )?;
        let mut jumps = Vec::new();
        for (rate, op) in [
            (p.gamma_o, a),
            (p.gamma_m * (nbar + 1.0), b.clone()),
            (p.gamma_m * nbar, b.adjoint()),
        ] {
            if rate > 0.0 {
                jumps.push((rate, op));
            }
        }
        Ok(Self { jumps })
    }
}

/// Rotating-frame Hamiltonian of the dissipative runs. The drive is not
/// part of the master-equation model.
pub fn master_hamiltonian(p: &ModelParams, spec: &HilbertSpec) -> Result<Operator> {
    p.validate()?;
    if p.drive != 0.0 {
        return Err(Error::InvalidParameter(
            "the master equation is integrated without drive; set drive = 0".into(),
        ));
    }
    build_number_conserving(0.0, p.g, spec)
}

/// Dense right-hand side of the master equation (traceless, Hermitian).
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    p: &ModelParams,
    h: &Operator,
    spec: &HilbertSpec,
) -> Result<CMatrix> {
    spec.check_dim(rho.dim())?;
    spec.check_dim(h.dim())?;
    let r = rho.matrix();
    let hm = h.matrix();
    let mut out = (hm * r - r * hm) * (-I);
    for (rate, c) in &Dissipators::new(p, spec)?.jumps {
        let cm = c.matrix();
        let cd = cm.adjoint();
        let cdc = &cd * cm;
        out += (cm * r * &cd - (&cdc * r + r * &cdc) * C64::new(0.5, 0.0)) * C64::new(*rate, 0.0);
    }
    Ok(out)
}

/// Which entries of the vectorized density matrix are evolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorMode {
    /// Every entry.
    Full,
    /// Entries reachable from the support of the initial state.
    #[default]
    Reachable,
    /// Reachable entries diagonal in photon number. Exact for observables
    /// that commute with the photon number; photon coherences are dropped.
    PhotonDiagonal,
}

/// Sparse Liouvillian restricted to an invariant set of matrix entries.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    /// Full vectorized indices of the retained entries.
    keep: Vec<usize>,
    /// Position of the transposed entry `(j, i)` for each retained `(i, j)`.
    partner: Vec<usize>,
    /// Positions of diagonal entries.
    diagonal: Vec<usize>,
    op: CsrMatrix,
}

fn push_row(
    t: &mut Triplets,
    row: usize,
    i: usize,
    j: usize,
    dim: usize,
    heff: &[Vec<(usize, C64)>],
    heff_rows_conj: &[Vec<(usize, C64)>],
    jumps: &[(f64, Vec<Vec<(usize, C64)>>)],
    col_of: &dyn Fn(usize) -> Option<usize>,
) -> Result<()> {
    let mut put = |full: usize, v: C64| -> Result<()> {
        match col_of(full) {
            Some(c) => {
                t.push(row, c, v);
                Ok(())
            }
            None if v == ZERO => Ok(()),
            None => Err(Error::Numerical(format!(
                "retained entries are not closed under the Liouvillian (entry {full})"
            ))),
        }
    };
    // -i H_eff rho
    for &(k, v) in &heff[i] {
        put(k * dim + j, -I * v)?;
    }
    // +i rho H_eff^dag: (rho H_eff^dag)_ij = sum_k rho_ik conj(H_eff[j, k])
    for &(k, v) in &heff_rows_conj[j] {
        put(i * dim + k, I * v)?;
    }
    // c rho c^dag
    for (rate, rows) in jumps {
        for &(k, ck) in &rows[i] {
            for &(l, cl) in &rows[j] {
                put(k * dim + l, ck * cl.conj() * *rate)?;
            }
        }
    }
    Ok(())
}

fn sparse_rows(m: &CMatrix) -> Vec<Vec<(usize, C64)>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .filter_map(|k| {
                    let v = m[(i, k)];
                    (v != ZERO).then_some((k, v))
                })
                .collect()
        })
        .collect()
}

impl Liouvillian {
    /// Assembles the Liouvillian of `h` and `diss` on the entries selected by
    /// `mode` starting from `rho0`.
    pub fn new(
        h: &Operator,
        diss: &Dissipators,
        spec: &HilbertSpec,
        rho0: &DensityMatrix,
        mode: SectorMode,
    ) -> Result<Self> {
        let dim = spec.dim();
        spec.check_dim(h.dim())?;
        spec.check_dim(rho0.dim())?;
        let mut heff_m = h.matrix().clone();
        for (rate, c) in &diss.jumps {
            let cdc = c.matrix().adjoint() * c.matrix();
            heff_m -= cdc * C64::new(0.0, 0.5 * rate);
        }
        let heff = sparse_rows(&heff_m);
        let heff_conj: Vec<Vec<(usize, C64)>> = heff
            .iter()
            .map(|r| r.iter().map(|&(k, v)| (k, v.conj())).collect())
            .collect();
        let jumps: Vec<(f64, Vec<Vec<(usize, C64)>>)> = diss
            .jumps
            .iter()
            .map(|(rate, c)| (*rate, sparse_rows(c.matrix())))
            .collect();

        let keep = match mode {
            SectorMode::Full => (0..dim * dim).collect(),
            SectorMode::Reachable | SectorMode::PhotonDiagonal => {
                let full = Self::assemble(dim, &(0..dim * dim).collect::<Vec<_>>(), &heff, &heff_conj, &jumps)?;
                let mut keep = reachable(&full, rho0);
                if mode == SectorMode::PhotonDiagonal {
                    keep.retain(|&v| spec.split(v / dim).1 == spec.split(v % dim).1);
                    if !full.rows_closed_over(&keep) {
                        return Err(Error::Numerical(
                            "photon-diagonal entries do not evolve autonomously for this model"
                                .into(),
                        ));
                    }
                }
                keep
            }
        };
        let op = Self::assemble(dim, &keep, &heff, &heff_conj, &jumps)?;

        let mut pos = vec![usize::MAX; dim * dim];
        for (a, &v) in keep.iter().enumerate() {
            pos[v] = a;
        }
        let mut partner = Vec::with_capacity(keep.len());
        let mut diagonal = Vec::new();
        for (a, &v) in keep.iter().enumerate() {
            let (i, j) = (v / dim, v % dim);
            let q = pos[j * dim + i];
            if q == usize::MAX {
                return Err(Error::Numerical(
                    "retained entries are not closed under transposition".into(),
                ));
            }
            partner.push(q);
            if i == j {
                diagonal.push(a);
            }
        }
        Ok(Self {
            dim,
            keep,
            partner,
            diagonal,
            op,
        })
    }

    fn assemble(
        dim: usize,
        keep: &[usize],
        heff: &[Vec<(usize, C64)>],
        heff_conj: &[Vec<(usize, C64)>],
        jumps: &[(f64, Vec<Vec<(usize, C64)>>)],
    ) -> Result<CsrMatrix> {
        let mut pos = vec![usize::MAX; dim * dim];
        for (a, &v) in keep.iter().enumerate() {
            pos[v] = a;
        }
        let col_of = |full: usize| {
            let p = pos[full];
            (p != usize::MAX).then_some(p)
        };
        let mut t = Triplets::new(keep.len(), keep.len());
        for (row, &v) in keep.iter().enumerate() {
            push_row(&mut t, row, v / dim, v % dim, dim, heff, heff_conj, jumps, &col_of)?;
        }
        Ok(t.to_csr())
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.op.nnz()
    }

    pub fn operator(&self) -> &CsrMatrix {
        &self.op
    }

    /// Retained entries of `rho`.
    pub fn gather(&self, rho: &CMatrix) -> Vec<C64> {
        self.keep
            .iter()
            .map(|&v| rho[(v / self.dim, v % self.dim)])
            .collect()
    }

    /// Density matrix with the retained entries set from `v`, zero elsewhere.
    pub fn scatter(&self, v: &[C64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (&full, &z) in self.keep.iter().zip(v) {
            m[(full / self.dim, full % self.dim)] = z;
        }
        m
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.op.mul_vec_into(x, y);
    }

    pub fn trace(&self, v: &[C64]) -> C64 {
        self.diagonal.iter().map(|&a| v[a]).sum()
    }

    /// Replaces `v` by its Hermitian part; returns the largest correction.
    pub fn hermitize(&self, v: &mut [C64]) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..v.len() {
            let b = self.partner[a];
            if b < a {
                continue;
            }
            let (x, y) = (v[a], v[b]);
            let avg = (x + y.conj()) * 0.5;
            worst = worst.max((x - avg).norm());
            v[a] = avg;
            v[b] = avg.conj();
        }
        worst
    }
}

/// Vectorized entries reachable from the support of `rho0`.
fn reachable(full: &CsrMatrix, rho0: &DensityMatrix) -> Vec<usize> {
    let n = full.nrows();
    // Reverse adjacency: column c feeds every row r with L[r, c] != 0.
    let mut feeds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for (c, _) in full.row(r) {
            feeds[c].push(r);
        }
    }
    let m = rho0.matrix();
    let dim = m.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if m[(v / dim, v % dim)] != ZERO {
            seen[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(c) = queue.pop_front() {
        for &r in &feeds[c] {
            if !seen[r] {
                seen[r] = true;
                queue.push_back(r);
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

/// Frequency scale that bounds the integrator step: the largest mechanical
/// oscillation frequency and the fastest decay rates of the truncated space.
pub fn omega_max(p: &ModelParams, spec: &HilbertSpec) -> Result<f64> {
    let nbar = p.thermal_nbar()?;
    let chi = sector_frequency(spec.n_cav() - 1, p.g)?;
    let optical = p.gamma_o * (spec.n_cav() - 1) as f64;
    let mechanical = p.gamma_m * (2.0 * nbar + 1.0) * spec.n_mech() as f64;
    Ok(chi.max(optical).max(mechanical))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterOptions {
    pub sectors: SectorMode,
    /// Explicit step; refused if `h * omega_max` exceeds [`MAX_STEP_PRODUCT`].
    pub step: Option<f64>,
    /// Evaluate the spectrum of each sample for the positivity check.
    pub check_positivity: bool,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            sectors: SectorMode::Reachable,
            step: None,
            check_positivity: true,
        }
    }
}

/// Fixed-step RK4 integration of the master equation, sampled on `grid`.
/// Each sample interval is split into equal steps no longer than the chosen
/// step size.
pub fn integrate_master(
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    p: &ModelParams,
    spec: &HilbertSpec,
    opts: &MasterOptions,
) -> Result<Trajectory<DensityMatrix>> {
    let h = master_hamiltonian(p, spec)?;
    let diss = Dissipators::new(p, spec)?;
    let liou = Liouvillian::new(&h, &diss, spec, rho0, opts.sectors)?;

    let w = omega_max(p, spec)?;
    let h_max = match opts.step {
        Some(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(format!("step = {s}")));
            }
            if s * w > MAX_STEP_PRODUCT {
                return Err(Error::StepTooLarge {
                    step: s,
                    product: s * w,
                    limit: MAX_STEP_PRODUCT,
                });
            }
            s
        }
        None => MAX_STEP.min(MAX_STEP_PRODUCT / w),
    };
    let sub = (grid.dt() / h_max).ceil().max(1.0) as usize;
    let step = grid.dt() / sub as f64;

    let n = liou.len();
    let mut v = liou.gather(rho0.matrix());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
        vec![ZERO; n],
    );

    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    let mut meta = TrajectoryMeta {
        integrator: format!("rk4, sparse Liouvillian ({n} entries, {:?})", opts.sectors),
        step: Some(step),
        params: Some(p.clone()),
        spec: Some(*spec),
        ..Default::default()
    };
    let mut min_eig = f64::INFINITY;

    let record = |v: &[C64], t: f64, meta: &mut TrajectoryMeta, min_eig: &mut f64| {
        let tr = liou.trace(v);
        meta.max_norm_drift = meta.max_norm_drift.max((tr - C64::new(1.0, 0.0)).norm());
        let rho = DensityMatrix::from_matrix_unchecked(liou.scatter(v));
        if opts.check_positivity {
            let e = rho.min_eigenvalue();
            *min_eig = min_eig.min(e);
            if e < POSITIVITY_WARN {
                meta.warnings
                    .push(format!("t = {t}: smallest eigenvalue {e:.3e} below {POSITIVITY_WARN:e}"));
            }
        }
        rho
    };

    states.push(record(&v, times[0], &mut meta, &mut min_eig));
    let hh = C64::new(step, 0.0);
    let half = C64::new(0.5 * step, 0.0);
    for &t in &times[1..] {
        for _ in 0..sub {
            liou.apply(&v, &mut k1);
            axpy(&v, half, &k1, &mut tmp);
            liou.apply(&tmp, &mut k2);
            axpy(&v, half, &k2, &mut tmp);
            liou.apply(&tmp, &mut k3);
            axpy(&v, hh, &k3, &mut tmp);
            liou.apply(&tmp, &mut k4);
            let sixth = C64::new(step / 6.0, 0.0);
            for a in 0..n {
                v[a] = flush(v[a] + sixth * (k1[a] + 2.0 * (k2[a] + k3[a]) + k4[a]));
            }
            let c = liou.hermitize(&mut v);
            meta.max_hermiticity_correction = meta.max_hermiticity_correction.max(c);
        }
        states.push(record(&v, t, &mut meta, &mut min_eig));
    }
    if opts.check_positivity {
        meta.min_eigenvalue = Some(min_eig);
    }
    Ok(Trajectory {
        times,
        states,
        meta,
    })
}

/// Components of a unit-trace state below this are set to zero. Decaying
/// populations otherwise stall in the subnormal range, where a step that
/// multiplies by nearly one rounds back to the same value and every flop
/// becomes two orders of magnitude slower.
const FLUSH_FLOOR: f64 = 1e-200;

#[inline]
fn flush(z: C64) -> C64 {
    let re = if z.re.abs() < FLUSH_FLOOR { 0.0 } else { z.re };
    let im = if z.im.abs() < FLUSH_FLOOR { 0.0 } else { z.im };
    C64::new(re, im)
}

#[inline]
fn axpy(x: &[C64], a: C64, y: &[C64], out: &mut [C64]) {
    for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}
