//! Dense complex vectors, Hermitian matrices and the small-matrix kernels
//! (Cholesky, cyclic Jacobi eigensolver) the estimators are built on.
//!
//! Everything here targets the small dimensions of a transmit array
//! (M up to a few hundred); no attempt is made at blocked or sparse kernels.

use num_complex::Complex;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Column vector of complex entries.
///
/// Invariant: every entry is finite. Constructors check this once so the
/// hot paths can assume it.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec {
    entries: Vec<Complex64>,
}

impl ComplexVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension("vector must have dim >= 1".into()));
        }
        if !entries.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite vector entry".into()));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_raw(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Standard basis vector `e_idx` (0-based) scaled by `scale`.
    pub fn scaled_unit(dim: usize, idx: usize, scale: f64) -> Result<Self> {
        if idx >= dim {
            return Err(Error::InvalidInput(format!(
                "unit index {idx} out of range for dim {dim}"
            )));
        }
        let mut v = Self::zeros(dim);
        v.entries[idx] = Complex64::new(scale, 0.0);
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Transpose product `sum_i self_i * other_i` (no conjugation).
    pub fn dot_t(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Hermitian product `sum_i conj(self_i) * other_i`.
    pub fn dot_h(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            entries: self.entries.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor * other`, in place.
    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += factor * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Index<usize> for ComplexVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

impl std::ops::IndexMut<usize> for ComplexVec {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.entries[i]
    }
}

/// Hermitian matrix stored dense row-major.
///
/// Invariant: `entry(i,j) == conj(entry(j,i))` exactly. Mutating operations
/// write both triangles from the same product so the invariant never decays;
/// `from_entries` accepts input that is Hermitian to 1e-12 and re-mirrors it.
#[derive(Clone, Debug)]
pub struct HermitianMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMat {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("matrix must have dim >= 1".into()));
        }
        let mut m = Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        };
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Builds from a dense row-major buffer, checking the Hermitian symmetry
    /// to 1e-12 absolute and then mirroring the lower triangle exactly.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidDimension(format!(
                "expected {dim}x{dim} entries"
            )));
        }
        if !entries.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                if (a - b).norm() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        let mut m = Self { dim, data: entries };
        m.mirror_upper();
        Ok(m)
    }

    /// Mirrors the upper triangle into the lower one and forces real diagonal.
    fn mirror_upper(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v.conj();
        if i == j {
            self.data[i * self.dim + i].im = 0.0;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &ComplexVec) -> ComplexVec {
        debug_assert_eq!(self.dim, v.dim());
        let n = self.dim;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v.as_slice()) {
                acc += a * b;
            }
            out.push(acc);
        }
        ComplexVec::from_raw(out)
    }

    /// `self * conj(v)`; the workhorse of the estimator recursion.
    pub fn mul_conj(&self, v: &ComplexVec) -> ComplexVec {
        debug_assert_eq!(self.dim, v.dim());
        let n = self.dim;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v.as_slice()) {
                acc += a * b.conj();
            }
            out.push(acc);
        }
        ComplexVec::from_raw(out)
    }

    /// Rank-one downdate `self -= w w^H / denom`, written symmetrically.
    pub fn sub_outer_self(&mut self, w: &ComplexVec, denom: f64) {
        debug_assert_eq!(self.dim, w.dim());
        let n = self.dim;
        let ws = w.as_slice();
        for i in 0..n {
            let wi = ws[i];
            let diag = i * n + i;
            self.data[diag].re -= wi.norm_sqr() / denom;
            self.data[diag].im = 0.0;
            for j in (i + 1)..n {
                let v = wi * ws[j].conj() / denom;
                self.data[i * n + j] -= v;
                self.data[j * n + i] -= v.conj();
            }
        }
    }

    /// Rank-one update `self += weight * v v^H`, written symmetrically.
    pub fn add_outer_self(&mut self, v: &ComplexVec, weight: f64) {
        debug_assert_eq!(self.dim, v.dim());
        let n = self.dim;
        let vs = v.as_slice();
        for i in 0..n {
            let vi = vs[i];
            let diag = i * n + i;
            self.data[diag].re += weight * vi.norm_sqr();
            self.data[diag].im = 0.0;
            for j in (i + 1)..n {
                let inc = vi * vs[j].conj() * weight;
                self.data[i * n + j] += inc;
                self.data[j * n + i] += inc.conj();
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.data {
            *c *= factor;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Real quadratic form `v^T self conj(v)`; nonnegative whenever the
    /// matrix is PSD.
    pub fn quad_form_t(&self, v: &ComplexVec) -> f64 {
        let w = self.mul_conj(v);
        v.dot_t(&w).re
    }

    /// `trace(self * other)`; real for two Hermitian operands.
    pub fn trace_product(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.get(i, j) * other.get(j, i)).re;
            }
        }
        acc
    }

    /// Attempted Cholesky factorization; `None` if not numerically PD.
    pub fn cholesky(&self) -> Option<CholeskyFactor> {
        let n = self.dim;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut acc = self.get(i, j);
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = acc / djj;
            }
        }
        Some(CholeskyFactor { dim: n, l })
    }

    /// Eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = jacobi_hermitian(self, false);
        vals
    }

    /// Smallest and largest eigenvalue.
    pub fn eig_range(&self) -> (f64, f64) {
        let vals = self.eigenvalues();
        (vals[0], *vals.last().unwrap())
    }

    /// Full spectral decomposition `self = V diag(vals) V^H`.
    pub fn eigen_decompose(&self) -> (Vec<f64>, ComplexMat) {
        let (vals, vecs) = jacobi_hermitian(self, true);
        (vals, vecs.unwrap())
    }

    /// Clamps the spectrum to `[lo, hi]` and reconstructs. Returns the worst
    /// violation that was removed (0 when nothing was out of range).
    pub fn clamp_spectrum(&mut self, lo: f64, hi: f64) -> f64 {
        let (vals, vecs) = self.eigen_decompose();
        let mut worst = 0.0f64;
        for &v in &vals {
            worst = worst.max(lo - v).max(v - hi);
        }
        if worst <= 0.0 {
            return 0.0;
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for (k, &v) in vals.iter().enumerate() {
            let col = vecs.col(k);
            out.add_outer_self(&col, v.clamp(lo, hi));
        }
        self.data = out.data;
        worst
    }

    /// PSD square root via the spectral decomposition; negative tail of the
    /// spectrum (rounding noise) is clamped to zero.
    pub fn sqrt_psd(&self) -> ComplexMat {
        let (vals, vecs) = self.eigen_decompose();
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            let s = vals[k].max(0.0).sqrt();
            for i in 0..n {
                let vik = vecs.get(i, k);
                for j in 0..n {
                    data[i * n + j] += vik * vecs.get(j, k).conj() * s;
                }
            }
        }
        ComplexMat {
            rows: n,
            cols: n,
            data,
        }
    }
}

/// Lower-triangular Cholesky factor with forward/back substitution.
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<Complex64>,
}

impl CholeskyFactor {
    /// Solves `L L^H x = b`.
    pub fn solve_vec(&self, b: &ComplexVec) -> ComplexVec {
        let n = self.dim;
        debug_assert_eq!(n, b.dim());
        let mut x: Vec<Complex64> = b.as_slice().to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                x[i] = x[i] - lik * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[k * n + i].conj();
                x[i] = x[i] - lki * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        ComplexVec::from_raw(x)
    }

    /// Solves `L L^H X = B` column by column.
    pub fn solve_mat(&self, b: &ComplexMat) -> ComplexMat {
        let mut out = ComplexMat::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col = self.solve_vec(&b.col(j));
            for i in 0..b.rows {
                out.set(i, j, col[i]);
            }
        }
        out
    }
}

/// General rectangular complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: &[ComplexVec]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDimension("matrix must have rows >= 1".into()));
        }
        let cols = rows[0].dim();
        if rows.iter().any(|r| r.dim() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r.as_slice());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> ComplexVec {
        ComplexVec::from_raw((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &ComplexVec) -> ComplexVec {
        debug_assert_eq!(self.cols, v.dim());
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            out.push(acc);
        }
        ComplexVec::from_raw(out)
    }

    /// `self * other`.
    pub fn mul_mat(&self, other: &ComplexMat) -> ComplexMat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = ComplexMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> ComplexMat {
        let mut out = ComplexMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// `self * omega * self^H + shift * I`, mirrored into an exact Hermitian.
    pub fn gram_through(&self, omega: &HermitianMat, shift: f64) -> HermitianMat {
        debug_assert_eq!(self.cols, omega.dim());
        let n = self.rows;
        // T = omega * self^H  (cols x n)
        let ah = self.hermitian_transpose();
        let mut t = ComplexMat::zeros(omega.dim(), n);
        for i in 0..omega.dim() {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..omega.dim() {
                    acc += omega.get(i, k) * ah.get(k, j);
                }
                t.set(i, j, acc);
            }
        }
        let prod = self.mul_mat(&t);
        let mut out = HermitianMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    Complex64::new(prod.get(i, i).re + shift, 0.0)
                } else {
                    // average the two round-off images of a Hermitian pair
                    (prod.get(i, j) + prod.get(j, i).conj()) * 0.5
                };
                out.set_sym(i, j, v);
            }
        }
        out
    }
}

/// Cyclic Jacobi for Hermitian matrices. Returns eigenvalues ascending and,
/// when requested, the unitary matrix of eigenvectors (columns).
fn jacobi_hermitian(m: &HermitianMat, want_vectors: bool) -> (Vec<f64>, Option<ComplexMat>) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = if want_vectors {
        Some(ComplexMat::from(HermitianMat::identity(n).unwrap()))
    } else {
        None
    };
    if n == 1 {
        return (vec![a.get(0, 0).re], v);
    }
    let scale: f64 = a
        .data
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / mag; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on (p, q)
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                // A <- A G on columns p, q
                for i in 0..n {
                    let aip = a.data[i * n + p];
                    let aiq = a.data[i * n + q];
                    a.data[i * n + p] = aip * gpp + aiq * gqp;
                    a.data[i * n + q] = aip * gpq + aiq * gqq;
                }
                // A <- G^H A on rows p, q
                for j in 0..n {
                    let apj = a.data[p * n + j];
                    let aqj = a.data[q * n + j];
                    a.data[p * n + j] = gpp.conj() * apj + gqp.conj() * aqj;
                    a.data[q * n + j] = gpq.conj() * apj + gqq.conj() * aqj;
                }
                a.data[p * n + q] = Complex64::new(0.0, 0.0);
                a.data[q * n + p] = Complex64::new(0.0, 0.0);
                a.data[p * n + p].im = 0.0;
                a.data[q * n + q].im = 0.0;
                if let Some(vm) = v.as_mut() {
                    for i in 0..n {
                        let vip = vm.get(i, p);
                        let viq = vm.get(i, q);
                        vm.set(i, p, vip * gpp + viq * gqp);
                        vm.set(i, q, vip * gpq + viq * gqq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vecs = v.map(|vm| {
        let mut out = ComplexMat::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..n {
                out.set(i, new_col, vm.get(i, old_col));
            }
        }
        out
    });
    (vals, vecs)
}

impl From<HermitianMat> for ComplexMat {
    fn from(h: HermitianMat) -> Self {
        ComplexMat {
            rows: h.dim,
            cols: h.dim,
            data: h.data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_rejects_asymmetric_input() {
        let bad = vec![c(1.0, 0.0), c(0.5, 0.1), c(0.5, 0.1), c(2.0, 0.0)];
        assert!(HermitianMat::from_entries(2, bad).is_err());
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = HermitianMat::from_entries(
            2,
            vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        )
        .unwrap();
        let vals = m.eigenvalues();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let m = HermitianMat::from_entries(
            3,
            vec![
                c(3.0, 0.0),
                c(1.0, 0.5),
                c(0.0, -0.2),
                c(1.0, -0.5),
                c(2.0, 0.0),
                c(0.3, 0.1),
                c(0.0, 0.2),
                c(0.3, -0.1),
                c(1.0, 0.0),
            ],
        )
        .unwrap();
        let (vals, vecs) = m.eigen_decompose();
        let mut rebuilt = HermitianMat::zeros(3);
        for (k, &v) in vals.iter().enumerate() {
            rebuilt.add_outer_self(&vecs.col(k), v);
        }
        assert!(m.max_abs_diff(&rebuilt) < 1e-10);
    }

    #[test]
    fn cholesky_solves() {
        let m = HermitianMat::from_entries(
            2,
            vec![c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)],
        )
        .unwrap();
        let f = m.cholesky().expect("PD");
        let b = ComplexVec::new(vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        let x = f.solve_vec(&b);
        let back = m.mul_vec(&x);
        for i in 0..2 {
            assert!((back[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m =
            HermitianMat::from_entries(2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)])
                .unwrap();
        assert!(m.cholesky().is_none());
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut m = HermitianMat::identity(3).unwrap();
        let v = ComplexVec::new(vec![c(0.6, 0.1), c(-0.2, 0.4), c(0.0, 0.3)]).unwrap();
        m.add_outer_self(&v, 0.8);
        let r = m.sqrt_psd();
        let back = r.mul_mat(&r.hermitian_transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - m.get(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn clamp_spectrum_reports_violation() {
        let mut m = HermitianMat::identity(2).unwrap();
        let v = ComplexVec::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        m.add_outer_self(&v, 0.5); // eigenvalue 1.5 on e1
        let worst = m.clamp_spectrum(0.0, 1.0);
        assert_abs_diff_eq!(worst, 0.5, epsilon = 1e-12);
        let (_, hi) = m.eig_range();
        assert!(hi <= 1.0 + 1e-12);
    }
}
