//! Wigner function of a mechanical density matrix on a rectangular grid.
//!
//! With `b = (q + i p) / sqrt 2` the vacuum is `exp(-q^2 - p^2) / pi`.
//! Values come from the Laguerre-polynomial expansion
//! `W = sum_{m,n} rho_{mn} W_{nm}`, where the Fock-basis kernels `W_{mn}` are
//! built by a three-term recursion that never forms factorials or powers.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64, ZERO};
use crate::observables::squeezing_report;

/// Tolerated `|integral of W - 1|` before a grid is flagged as too small.
pub const MASS_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(q_axis[i], p_axis[j])`.
    pub values: DMatrix<f64>,
    /// `1 - integral of W` by the trapezoidal rule.
    pub mass_deficit: f64,
    pub warning: Option<String>,
}

/// `points` evenly spaced values in `[lo, hi]`.
pub fn axis(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo || points < 2 {
        return Err(Error::InvalidParameter(format!(
            "axis [{lo}, {hi}] with {points} points"
        )));
    }
    Ok(crate::dynamics::spectrum::linspace(lo, hi, points))
}

/// Square axes centred on the mean quadratures that reach `n_sigma` widths
/// of the broadest quadrature in every direction.
pub fn covering_axes(rho_m: &DensityMatrix, n_sigma: f64, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mq, mp, sigma) = mean_and_width(rho_m);
    let half = n_sigma * sigma;
    Ok((axis(mq - half, mq + half, points)?, axis(mp - half, mp + half, points)?))
}

/// Mean `q`, mean `p` and the largest quadrature standard deviation.
fn mean_and_width(rho_m: &DensityMatrix) -> (f64, f64, f64) {
    let rho = rho_m.matrix();
    let mut b = ZERO;
    for k in 1..rho_m.dim() {
        b += rho[(k, k - 1)] * (k as f64).sqrt();
    }
    let rep = squeezing_report(rho_m);
    // The broadest variance is 1/2 + N + |M| = 1 + 2N - v_min.
    let mut nb = 0.0;
    for k in 0..rho_m.dim() {
        nb += k as f64 * rho[(k, k)].re;
    }
    let v_max = 1.0 + 2.0 * (nb - b.norm_sqr()) - rep.v_min;
    let s2 = std::f64::consts::SQRT_2;
    (s2 * b.re, s2 * b.im, v_max.max(0.0).sqrt())
}

/// Point evaluator holding the density matrix and scratch space.
#[derive(Clone, Debug)]
pub struct WignerEvaluator {
    rho: Vec<C64>,
    dim: usize,
    scratch: Vec<C64>,
}

impl WignerEvaluator {
    pub fn new(rho_m: &DensityMatrix) -> Self {
        let dim = rho_m.dim();
        let m = rho_m.matrix();
        // Hermitian part, row-major.
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            }
        }
        Self {
            rho,
            dim,
            scratch: vec![ZERO; dim],
        }
    }

    pub fn at(&mut self, q: f64, p: f64) -> f64 {
        let dim = self.dim;
        let rho = &self.rho;
        let w = &mut self.scratch;
        let a = C64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
        let a2 = 2.0 * a;
        let a2c = a2.conj();
        // w[n] holds the kernel of the current row m; row 0 first.
        w[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
        let mut total = rho[0].re * w[0].re;
        for n in 1..dim {
            w[n] = a2 * w[n - 1] / (n as f64).sqrt();
            total += 2.0 * (rho[n] * w[n]).re;
        }
        for m in 1..dim {
            let sm = (m as f64).sqrt();
            let mut prev_row = w[m];
            w[m] = (a2c * prev_row - sm * w[m - 1]) / sm;
            total += rho[m * dim + m].re * w[m].re;
            for n in m + 1..dim {
                let next = (a2 * w[n - 1] - sm * prev_row) / (n as f64).sqrt();
                prev_row = w[n];
                w[n] = next;
                total += 2.0 * (rho[m * dim + n] * w[n]).re;
            }
        }
        total
    }
}

impl WignerField {
    /// Assembles a field from precomputed values and measures its mass.
    pub fn from_values(q_axis: Vec<f64>, p_axis: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != q_axis.len() || values.ncols() != p_axis.len() {
            return Err(Error::DimensionMismatch {
                expected: q_axis.len() * p_axis.len(),
                found: values.len(),
            });
        }
        let mut field = Self {
            q_axis,
            p_axis,
            values,
            mass_deficit: 0.0,
            warning: None,
        };
        field.mass_deficit = 1.0 - field.integrate(|_, _| 1.0);
        if field.mass_deficit.abs() > MASS_TOL {
            field.warning = Some(format!(
                "grid misses {:.3e} of the Wigner mass; widen the axes",
                field.mass_deficit
            ));
        }
        Ok(field)
    }

    /// Field from columns evaluated elsewhere, `columns[i][j] = W(q_axis[i], p_axis[j])`.
    pub fn from_columns(q_axis: Vec<f64>, p_axis: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let (nq, np) = (q_axis.len(), p_axis.len());
        if columns.len() != nq || columns.iter().any(|c| c.len() != np) {
            return Err(Error::DimensionMismatch {
                expected: nq * np,
                found: columns.iter().map(Vec::len).sum(),
            });
        }
        let values = DMatrix::from_fn(nq, np, |i, j| columns[i][j]);
        Self::from_values(q_axis, p_axis, values)
    }

    /// Trapezoidal `integral of f(q, p) W(q, p) dq dp`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let wq = trapezoid_weights(&self.q_axis);
        let wp = trapezoid_weights(&self.p_axis);
        let mut acc = 0.0;
        for (i, &q) in self.q_axis.iter().enumerate() {
            for (j, &p) in self.p_axis.iter().enumerate() {
                acc += wq[i] * wp[j] * f(q, p) * self.values[(i, j)];
            }
        }
        acc
    }

    /// `(<q>, <p>, [[Vqq, Vqp], [Vqp, Vpp]])` by quadrature.
    pub fn moments(&self) -> (f64, f64, [[f64; 2]; 2]) {
        let mass = self.integrate(|_, _| 1.0);
        let mq = self.integrate(|q, _| q) / mass;
        let mp = self.integrate(|_, p| p) / mass;
        let vqq = self.integrate(|q, _| (q - mq).powi(2)) / mass;
        let vpp = self.integrate(|_, p| (p - mp).powi(2)) / mass;
        let vqp = self.integrate(|q, p| (q - mq) * (p - mp)) / mass;
        (mq, mp, [[vqq, vqp], [vqp, vpp]])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root of the trapezoidal integral of `(W1 - W2)^2`; the grids must agree.
    pub fn l2_distance(&self, other: &WignerField) -> Result<f64> {
        if self.q_axis != other.q_axis || self.p_axis != other.p_axis {
            return Err(Error::InvalidParameter("Wigner grids differ".into()));
        }
        let wq = trapezoid_weights(&self.q_axis);
        let wp = trapezoid_weights(&self.p_axis);
        let mut acc = 0.0;
        for i in 0..self.q_axis.len() {
            for j in 0..self.p_axis.len() {
                acc += wq[i] * wp[j] * (self.values[(i, j)] - other.values[(i, j)]).powi(2);
            }
        }
        Ok(acc.sqrt())
    }

    /// `q,p,W` rows, `q` outermost.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q,p,W")?;
        for (i, q) in self.q_axis.iter().enumerate() {
            for (j, p) in self.p_axis.iter().enumerate() {
                writeln!(out, "{q:.16e},{p:.16e},{:.16e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// `W(q, p)` on the product grid `q_axis x p_axis`.
pub fn wigner(rho_m: &DensityMatrix, q_axis: &[f64], p_axis: &[f64]) -> Result<WignerField> {
    if q_axis.len() < 2 || p_axis.len() < 2 {
        return Err(Error::InvalidParameter("Wigner axes need at least two points".into()));
    }
    if q_axis.iter().chain(p_axis).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Wigner axes".into()));
    }
    let mut ev = WignerEvaluator::new(rho_m);
    let values = DMatrix::from_fn(q_axis.len(), p_axis.len(), |i, j| ev.at(q_axis[i], p_axis[j]));
    WignerField::from_values(q_axis.to_vec(), p_axis.to_vec(), values)
}
