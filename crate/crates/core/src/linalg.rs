// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrix arithmetic, SVD and Takagi factorization.
//!
//! [`ComplexMatrix`] wraps a `nalgebra` matrix and only admits finite
//! entries through its public constructors. Everything here is a pure
//! function of its inputs.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::tolerances;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const J: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("matrix is not symmetric: max |s_ij - s_ji| = {defect:.3e}")]
    Asymmetric { defect: f64 },
    #[error("decomposition failed to converge")]
    NoConvergence,
}

/// Dense complex matrix stored by `nalgebra`.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}j  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn check_finite(m: &DMatrix<C64>) -> Result<(), LinalgError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(LinalgError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let m = DMatrix::from_row_slice(rows, cols, &entries);
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self, LinalgError> {
        let m = DMatrix::from_fn(rows, cols, f);
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self, LinalgError> {
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub(crate) fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    /// Square matrix with the given real diagonal.
    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self, LinalgError> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::from(diag[i]) } else { ZERO })
    }

    pub fn scalar(z: C64) -> Result<Self, LinalgError> {
        Self::from_row_major(1, 1, vec![z])
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, k: C64) -> Self {
        Self(&self.0 * k)
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(C64::from(k))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols() != rhs.rows() {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.same_shape(rhs)?;
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.same_shape(rhs)?;
        Ok(Self(&self.0 - &rhs.0))
    }

    fn same_shape(&self, rhs: &Self) -> Result<(), LinalgError> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(LinalgError::Dimension(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(())
    }

    fn require_square(&self, what: &str) -> Result<usize, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension(format!(
                "{what} requires a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        Ok(self.rows())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest absolute real part.
    pub fn max_abs_real(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.re.abs()))
    }

    /// Largest |a_ij - b_ij|; infinite when the shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.same_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Largest |a_ij - a_ji|; infinite for non-square input.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).norm());
            }
        }
        worst
    }

    /// Largest entry of |AᴴA - I|; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.0.adjoint() * &self.0;
        let eye = DMatrix::<C64>::identity(self.rows(), self.rows());
        (g - eye).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Returns (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> Self {
        Self((&self.0 + self.0.transpose()) * C64::from(0.5))
    }

    pub fn submatrix(&self, row: usize, col: usize, nrows: usize, ncols: usize) -> Self {
        Self(self.0.view((row, col), (nrows, ncols)).into_owned())
    }

    /// Assembles `[[a, b], [c, d]]` from conformable blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, LinalgError> {
        if a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols() {
            return Err(LinalgError::Dimension("blocks are not conformable".into()));
        }
        let (r0, c0) = (a.rows(), a.cols());
        let mut m = DMatrix::zeros(r0 + c.rows(), c0 + b.cols());
        m.view_mut((0, 0), (r0, c0)).copy_from(&a.0);
        m.view_mut((0, c0), (r0, b.cols())).copy_from(&b.0);
        m.view_mut((r0, 0), (c.rows(), c0)).copy_from(&c.0);
        m.view_mut((r0, c0), (d.rows(), d.cols())).copy_from(&d.0);
        Ok(Self(m))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows() == 0 || self.cols() == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.0.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// 2-norm condition number σmax/σmin; infinite when σmin is zero.
    pub fn condition_estimate(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 && lo.is_finite() => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }

    fn check_conditioning(&self) -> Result<(), LinalgError> {
        let condition = self.condition_estimate();
        if !(condition < tolerances::CONDITION_LIMIT) {
            return Err(LinalgError::Singular { condition });
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        self.require_square("inverse")?;
        self.check_conditioning()?;
        let inv = self.0.clone().lu().try_inverse().ok_or(LinalgError::Singular {
            condition: f64::INFINITY,
        })?;
        Ok(Self(inv))
    }

    /// Solves `self · x = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self, LinalgError> {
        let n = self.require_square("solve")?;
        if rhs.rows() != n {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has {} rows, expected {n}",
                rhs.rows()
            )));
        }
        self.check_conditioning()?;
        let x = self.0.clone().lu().solve(&rhs.0).ok_or(LinalgError::Singular {
            condition: f64::INFINITY,
        })?;
        Ok(Self(x))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

// Operator forms panic on shape mismatch, like the underlying nalgebra types.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// `m = u · diag(sigma) · vᴴ`, sigma descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_real_diagonal(&self.sigma).expect("finite singular values");
        &(&self.u * &d) * &self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd, LinalgError> {
    let n = m.require_square("svd")?;
    if n == 0 {
        return Ok(Svd {
            u: ComplexMatrix::identity(0),
            sigma: Vec::new(),
            v: ComplexMatrix::identity(0),
        });
    }
    let dec =
        nalgebra::SVD::try_new_unordered(m.0.clone(), true, true, f64::EPSILON, 0).ok_or(LinalgError::NoConvergence)?;
    let u = dec.u.ok_or(LinalgError::NoConvergence)?;
    let v = dec.v_t.ok_or(LinalgError::NoConvergence)?.adjoint();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let u = DMatrix::from_fn(n, n, |i, k| u[(i, order[k])]);
    let v = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let sigma = order.iter().map(|&k| dec.singular_values[k]).collect();
    Ok(Svd {
        u: ComplexMatrix(u),
        sigma,
        v: ComplexMatrix(v),
    })
}

/// Takagi factors `s = u · diag(lambda) · uᵀ` of a complex symmetric matrix.
#[derive(Debug, Clone)]
pub struct TakagiFactors {
    /// Unitary.
    pub u: ComplexMatrix,
    /// Nonnegative, descending.
    pub lambda: Vec<f64>,
}

impl TakagiFactors {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_real_diagonal(&self.lambda).expect("finite Takagi values");
        &(&self.u * &d) * &self.u.transpose()
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// With `s = A + jB`, a Takagi vector `u = x + jy` satisfying `s·u* = λu`
/// is exactly an eigenvector `[x; y]` of the real symmetric matrix
/// `[[A, B], [B, -A]]` with eigenvalue `λ`, whose spectrum is `±λ_k`.
/// The eigenvectors are mapped back to complex vectors and orthonormalized
/// in descending eigenvalue order; the partner `[-y; x]` of each vector
/// maps to `j·u` and is discarded by the orthonormalization. Repeated
/// Takagi values need no special treatment since any orthonormal basis of
/// a positive eigenspace is valid.
pub fn takagi(s: &ComplexMatrix) -> Result<TakagiFactors, LinalgError> {
    let n = s.require_square("takagi")?;
    check_finite(&s.0)?;
    let defect = s.symmetry_defect();
    if defect > tolerances::SYMMETRY_INPUT {
        return Err(LinalgError::Asymmetric { defect });
    }
    if s.max_abs() == 0.0 {
        return Ok(TakagiFactors {
            u: ComplexMatrix::identity(n),
            lambda: vec![0.0; n],
        });
    }
    let s = s.symmetrized();

    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = s.0[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) => z.re,
            (true, false) | (false, true) => z.im,
            (false, false) => -z.re,
        }
    });
    let eig = SymmetricEigen::try_new(embed, f64::EPSILON, 0).ok_or(LinalgError::NoConvergence)?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(n);
    for &k in &order {
        if basis.len() == n {
            break;
        }
        let col = eig.eigenvectors.column(k);
        let mut u = nalgebra::DVector::from_fn(n, |i, _| C64::new(col[i], col[i + n]));
        // Two passes of Gram-Schmidt keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&u);
                u -= q * proj;
            }
        }
        let norm = u.norm();
        if norm > 0.5 {
            basis.push(u / C64::from(norm));
        }
    }
    if basis.len() != n {
        return Err(LinalgError::NoConvergence);
    }

    // Rotate each vector so that the diagonal of uᴴ·s·u* is real and nonnegative.
    let mut pairs: Vec<(f64, nalgebra::DVector<C64>)> = basis
        .into_iter()
        .map(|u| {
            let c = u.dotc(&(&s.0 * u.conjugate()));
            let lambda = c.norm();
            let u = if lambda > 0.0 {
                u * C64::from_polar(1.0, 0.5 * c.arg())
            } else {
                u
            };
            (lambda, u)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let u = DMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(TakagiFactors {
        u: ComplexMatrix(u),
        lambda: pairs.iter().map(|p| p.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn svd_of_identity() {
        let f = svd(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(f.sigma, vec![1.0, 1.0]);
        assert!(f.reconstruct().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(f.u.unitarity_defect() < 1e-15);
    }

    #[test]
    fn svd_of_diagonal_is_sorted() {
        let m = ComplexMatrix::from_real_diagonal(&[0.2, 0.5]).unwrap();
        let f = svd(&m).unwrap();
        assert!((f.sigma[0] - 0.5).abs() < 1e-15);
        assert!((f.sigma[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn svd_rejects_rectangular() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(svd(&m), Err(LinalgError::Dimension(_))));
    }

    #[test]
    fn takagi_scaled_identity() {
        let s = ComplexMatrix::identity(2).scale_real(0.5);
        let t = takagi(&s).unwrap();
        assert!((t.lambda[0] - 0.5).abs() < 1e-14 && (t.lambda[1] - 0.5).abs() < 1e-14);
        assert!(t.reconstruct().max_abs_diff(&s) < 1e-10);
        assert!(t.u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn takagi_antidiagonal_degenerate() {
        let s = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.5, 0.0)], vec![c(0.5, 0.0), c(0.0, 0.0)]]).unwrap();
        let t = takagi(&s).unwrap();
        assert!((t.lambda[0] - 0.5).abs() < 1e-14 && (t.lambda[1] - 0.5).abs() < 1e-14);
        assert!(t.reconstruct().max_abs_diff(&s) < 1e-10);
        assert!(t.u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn takagi_zero_matrix() {
        let t = takagi(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(t.lambda, vec![0.0; 3]);
        assert_eq!(t.u, ComplexMatrix::identity(3));
    }

    #[test]
    fn takagi_rank_deficient() {
        // s = v vᵀ has one nonzero Takagi value |v|² and a two-dimensional null space.
        let v = [c(0.3, 0.1), c(-0.2, 0.4), c(0.1, -0.3)];
        let s = ComplexMatrix::from_fn(3, 3, |i, j| v[i] * v[j]).unwrap();
        let t = takagi(&s).unwrap();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((t.lambda[0] - norm2).abs() < 1e-14);
        assert!(t.lambda[1] < 1e-14 && t.lambda[2] < 1e-14);
        assert!(t.reconstruct().max_abs_diff(&s) < 1e-10);
        assert!(t.u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn takagi_rejects_asymmetric() {
        let s = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.5, 0.0)], vec![c(0.4, 0.0), c(0.0, 0.0)]]).unwrap();
        match takagi(&s) {
            Err(LinalgError::Asymmetric { defect }) => assert!((defect - 0.1).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_of_identity() {
        let i = ComplexMatrix::identity(4);
        assert_eq!(i.inverse().unwrap(), i);
    }

    #[test]
    fn singular_inverse_reports_condition() {
        let m = ComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ONE, ONE]]).unwrap();
        match m.inverse() {
            Err(LinalgError::Singular { condition }) => assert!(condition >= tolerances::CONDITION_LIMIT),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transpose_is_involution() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64 - 0.5)).unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn constructors_reject_non_finite() {
        let r = ComplexMatrix::from_row_major(1, 2, vec![ONE, c(f64::NAN, 0.0)]);
        assert_eq!(r, Err(LinalgError::NonFinite { row: 0, col: 1 }));
        assert!(ComplexMatrix::from_row_major(2, 2, vec![ONE]).is_err());
    }

    #[test]
    fn checked_ops_reject_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.checked_mul(&a).is_err());
        assert!(a.checked_add(&ComplexMatrix::zeros(3, 2)).is_err());
        assert!(a.checked_mul(&a.transpose()).is_ok());
    }
}
