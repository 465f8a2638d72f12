//! Truncated two-mode Fock space: ladder operators, tensor products, the
//! matrix exponential, expectation values and the partial trace over the
//! cavity.
//!
//! Composite basis states are ordered mechanics-major: the state with `k`
//! phonons and `n` photons sits at index `k * n_cav + n`. Every module goes
//! through [`HilbertSpec::index`] rather than recomputing this map.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance behind the Hermitian flag of [`Operator`].
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

/// Fock truncation of the cavity and mechanical modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    n_cav: usize,
    n_mech: usize,
}

impl HilbertSpec {
    pub fn new(n_cav: usize, n_mech: usize) -> Result<Self> {
        if n_cav == 0 || n_mech == 0 {
            return Err(Error::InvalidDimension(format!(
                "n_cav = {n_cav}, n_mech = {n_mech}; both must be >= 1"
            )));
        }
        Ok(Self { n_cav, n_mech })
    }

    pub fn n_cav(&self) -> usize {
        self.n_cav
    }

    pub fn n_mech(&self) -> usize {
        self.n_mech
    }

    pub fn dim(&self) -> usize {
        self.n_cav * self.n_mech
    }

    /// Composite index of `|k>_m |n>_c`.
    #[inline]
    pub fn index(&self, k: usize, n: usize) -> usize {
        debug_assert!(k < self.n_mech && n < self.n_cav);
        k * self.n_cav + n
    }

    /// Inverse of [`HilbertSpec::index`]: `(k, n)`.
    #[inline]
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.n_cav, i % self.n_cav)
    }

    /// Composite indices of the photon-number block `n`, ordered by `k`.
    pub fn photon_block(&self, n: usize) -> Vec<usize> {
        (0..self.n_mech).map(|k| self.index(k, n)).collect()
    }

    /// Composite indices whose phonon number has the given parity (0 or 1).
    pub fn parity_sector(&self, parity: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.split(i).0 % 2 == parity % 2)
            .collect()
    }

    /// Same cavity truncation, mechanical truncation scaled by `factor`
    /// (rounded up).
    pub fn scale_mech(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mechanical scale factor {factor}"
            )));
        }
        Self::new(self.n_cav, (self.n_mech as f64 * factor).ceil() as usize)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Square complex matrix acting on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidDimension("empty operator".into()));
        }
        Ok(Self {
            mat,
            hermitian: false,
        })
    }

    /// Builds an operator flagged Hermitian; fails if the matrix deviates
    /// from its adjoint by more than `1e-12 * max|A|`.
    pub fn hermitian(mat: CMatrix) -> Result<Self> {
        let mut op = Self::new(mat)?;
        let dev = op.hermiticity_deviation();
        if dev > HERMITIAN_REL_TOL * max_abs(&op.mat).max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian(dev));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dim = 0".into()));
        }
        Ok(Self {
            mat: CMatrix::identity(dim, dim),
            hermitian: true,
        })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dim = 0".into()));
        }
        Ok(Self {
            mat: CMatrix::zeros(dim, dim),
            hermitian: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            mat: &self.mat * s,
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        check_same(self.dim(), other.dim())?;
        Operator::new(&self.mat * &other.mat - &other.mat * &self.mat)
    }

    /// Restriction to the basis states listed in `idx` (rows and columns).
    pub fn restrict(&self, idx: &[usize]) -> Result<Operator> {
        let sub = submatrix(&self.mat, idx);
        Ok(Self {
            mat: sub,
            hermitian: self.hermitian,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_same(self.dim(), psi.dim())?;
        Ok(StateVector::from_vector(&self.mat * psi.amplitudes()))
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat + &rhs.mat,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat - &rhs.mat,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat * &rhs.mat,
            hermitian: false,
        }
    }
}

/// Pure state on a truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amp: CVector,
}

impl StateVector {
    pub fn from_vector(amp: CVector) -> Self {
        Self { amp }
    }

    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::LabelOutOfRange(format!(
                "basis index {i} >= dim {dim}"
            )));
        }
        let mut amp = CVector::zeros(dim);
        amp[i] = ONE;
        Ok(Self { amp })
    }

    /// `|k>_m |n>_c` in the composite space.
    pub fn product_basis(spec: &HilbertSpec, k: usize, n: usize) -> Result<Self> {
        if k >= spec.n_mech() || n >= spec.n_cav() {
            return Err(Error::LabelOutOfRange(format!(
                "(k, n) = ({k}, {n}) outside truncation ({}, {})",
                spec.n_mech(),
                spec.n_cav()
            )));
        }
        Self::basis(spec.dim(), spec.index(k, n))
    }

    /// Mechanics-major product `|m> (x) |c>`.
    pub fn product(mech: &StateVector, cav: &StateVector, spec: &HilbertSpec) -> Result<Self> {
        if mech.dim() != spec.n_mech() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_mech(),
                found: mech.dim(),
            });
        }
        if cav.dim() != spec.n_cav() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_cav(),
                found: cav.dim(),
            });
        }
        Ok(Self {
            amp: mech.amp.kronecker(&cav.amp),
        })
    }

    /// Coherent state `|alpha>` truncated to `dim` levels (not renormalized).
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dim = 0".into()));
        }
        let mut amp = CVector::zeros(dim);
        let mut c = ONE * (-0.5 * alpha.norm_sqr()).exp();
        for n in 0..dim {
            amp[n] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        Ok(Self { amp })
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amp
    }

    pub fn into_vector(self) -> CVector {
        self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized(n));
        }
        self.amp.unscale_mut(n);
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_same(self.dim(), other.dim())?;
        Ok(self.amp.dotc(&other.amp))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: &self.amp * self.amp.adjoint(),
        }
    }
}

/// Mixed state on a truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validated construction: Hermitian, unit trace, non-negative spectrum.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let rho = Self { mat };
        let herm = rho.hermiticity_deviation();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "max |rho - rho^dag| = {herm:e}"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace = {tr}")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// Skips validation; for intermediate results such as time derivatives.
    pub fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&hermitian_part(&self.mat))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn tensor(mech: &DensityMatrix, cav: &DensityMatrix) -> Self {
        Self {
            mat: mech.mat.kronecker(&cav.mat),
        }
    }
}

/// Anything that can be traced against an operator.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// `<psi|A|psi>` or `Tr(rho A)` without dimension checks.
    fn expect_unchecked(&self, a: &CMatrix) -> C64;
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        StateVector::dim(self)
    }
    fn expect_unchecked(&self, a: &CMatrix) -> C64 {
        self.amp.dotc(&(a * &self.amp))
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
    fn expect_unchecked(&self, a: &CMatrix) -> C64 {
        // Tr(rho A) = sum_ij rho_ij A_ji
        let n = self.dim();
        let mut acc = ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += self.mat[(i, j)] * a[(j, i)];
            }
        }
        acc
    }
}

/// Expectation value with the imaginary residue kept for inspection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealExpectation {
    pub value: f64,
    /// Set when the operator is flagged Hermitian and `|Im| > 1e-9`.
    pub imag_residue: Option<f64>,
}

pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

pub fn expectation<S: QuantumState>(a: &Operator, state: &S) -> Result<C64> {
    check_same(a.dim(), state.dim())?;
    Ok(state.expect_unchecked(a.matrix()))
}

pub fn expectation_real<S: QuantumState>(a: &Operator, state: &S) -> Result<RealExpectation> {
    let z = expectation(a, state)?;
    let imag_residue = (a.is_hermitian() && z.im.abs() > IMAG_RESIDUE_TOL).then_some(z.im);
    Ok(RealExpectation {
        value: z.re,
        imag_residue,
    })
}

/// Annihilation operator on `dim` Fock levels: `A[k-1, k] = sqrt(k)`.
pub fn destroy(dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim = 0".into()));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Operator::new(m)
}

pub fn create(dim: usize) -> Result<Operator> {
    Ok(destroy(dim)?.adjoint())
}

/// `b^dag b` with exact diagonal `0, 1, .., dim-1`.
pub fn number(dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim = 0".into()));
    }
    let m = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|k| C64::new(k as f64, 0.0)),
    ));
    Operator::hermitian(m)
}

/// `(b + b^dag)^2` projected onto the truncated space.
///
/// Built as `b^2 + b^dag^2 + 2 b^dag b + 1` so the last diagonal entry keeps
/// its untruncated value `2(dim-1) + 1`.
pub fn position_squared(dim: usize) -> Result<Operator> {
    let b = destroy(dim)?;
    let bd = b.adjoint();
    let n = number(dim)?;
    let mut m = b.matrix() * b.matrix() + bd.matrix() * bd.matrix();
    m += n.matrix() * C64::new(2.0, 0.0);
    for i in 0..dim {
        m[(i, i)] += ONE;
    }
    Operator::hermitian(m)
}

/// Kronecker product `mech (x) cav` in mechanics-major ordering.
pub fn tensor(mech: &Operator, cav: &Operator, spec: &HilbertSpec) -> Result<Operator> {
    if mech.dim() != spec.n_mech() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_mech(),
            found: mech.dim(),
        });
    }
    if cav.dim() != spec.n_cav() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cav(),
            found: cav.dim(),
        });
    }
    Ok(Operator {
        mat: mech.mat.kronecker(&cav.mat),
        hermitian: mech.hermitian && cav.hermitian,
    })
}

// Pade(13) coefficients and the scaling threshold of Higham (2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant.
pub fn expm(a: &Operator) -> Result<Operator> {
    Ok(Operator {
        mat: expm_matrix(a.matrix())?,
        hermitian: false,
    })
}

pub fn expm_matrix(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidDimension("expm of non-square matrix".into()));
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("expm argument".into()));
    }
    let norm = norm1(a);
    if norm == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(2f64.powi(-s), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE13[i], 0.0);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Pade denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are eigenvectors in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn new(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(m.nrows(), order.len());
        for (c, &i) in order.iter().enumerate() {
            vectors.set_column(c, &eig.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    /// `exp(-i H t)` from the stored decomposition.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut vd = self.vectors.clone();
        for (c, &e) in self.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            for z in vd.column_mut(c).iter_mut() {
                *z *= ph;
            }
        }
        vd * self.vectors.adjoint()
    }

    /// `exp(-i H t) v` without forming the propagator.
    pub fn evolve(&self, v: &CVector, t: f64) -> CVector {
        let mut coeff = self.vectors.adjoint() * v;
        for (c, &e) in self.values.iter().enumerate() {
            coeff[c] *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeff
    }
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Mechanical reduced state `Tr_c rho`.
pub fn partial_trace_cavity(rho: &DensityMatrix, spec: &HilbertSpec) -> Result<DensityMatrix> {
    spec.check_dim(rho.dim())?;
    let (nm, nc) = (spec.n_mech(), spec.n_cav());
    let mut out = CMatrix::zeros(nm, nm);
    for k in 0..nm {
        for kp in 0..nm {
            let mut acc = ZERO;
            for n in 0..nc {
                acc += rho.mat[(spec.index(k, n), spec.index(kp, n))];
            }
            out[(k, kp)] = acc;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Cavity reduced state `Tr_m rho`.
pub fn partial_trace_mech(rho: &DensityMatrix, spec: &HilbertSpec) -> Result<DensityMatrix> {
    spec.check_dim(rho.dim())?;
    let (nm, nc) = (spec.n_mech(), spec.n_cav());
    let mut out = CMatrix::zeros(nc, nc);
    for n in 0..nc {
        for np in 0..nc {
            let mut acc = ZERO;
            for k in 0..nm {
                acc += rho.mat[(spec.index(k, n), spec.index(k, np))];
            }
            out[(n, np)] = acc;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

pub(crate) fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
