//! Dense complex matrices `M_d(ℂ)` with the C*-algebra primitives used by a
//! single fiber: spectral norm, spectrum, positivity, square root and inverse.
//!
//! Numerical tolerances are relative: a check at tolerance `tol` on a matrix
//! `a` accepts deviations up to `tol * (1 + ‖a‖)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for Hermitian and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Iteration budget handed to the eigen and singular value solvers.
pub const EIGEN_ITER_BUDGET: usize = 10_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A square complex matrix of dimension `d ≥ 1` with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    inner: DMatrix<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CMatrix")
            .field("dim", &self.dim())
            .field("rows", &self.rows())
            .finish()
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            inner: DMatrix::from_element(dim, dim, ZERO),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal matrix with real diagonal entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "matrix dimension must be positive");
        let n = diag.len();
        Self {
            inner: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    ZERO
                }
            }),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            inner: DMatrix::from_fn(dim, dim, f),
        }
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Invalid(format!(
                "matrix is not square: row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(Self {
            inner: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    /// Wraps a square nalgebra matrix.
    pub fn from_dmatrix(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.nrows() != inner.ncols() {
            return Err(Error::Invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(Self { inner })
    }

    /// Assembles a square block matrix from a square grid of equally sized blocks.
    pub fn from_blocks(blocks: &[Vec<&CMatrix>]) -> Result<Self> {
        let k = blocks.len();
        if k == 0 || blocks.iter().any(|row| row.len() != k) {
            return Err(Error::DimensionMismatch("block grid must be square and non-empty".into()));
        }
        let d = blocks[0][0].dim();
        if blocks.iter().flatten().any(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch("blocks must share one dimension".into()));
        }
        let mut inner = DMatrix::from_element(k * d, k * d, ZERO);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, block) in row.iter().enumerate() {
                inner
                    .view_mut((bi * d, bj * d), (d, d))
                    .copy_from(&block.inner);
            }
        }
        Ok(Self { inner })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    /// Square diagonal block `(i, j)` of size `d` from a block matrix.
    pub fn block(&self, i: usize, j: usize, d: usize) -> CMatrix {
        Self {
            inner: self.inner.view((i * d, j * d), (d, d)).into_owned(),
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        Self {
            inner: &self.inner * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.inner.iter().all(|z| *z == ZERO)
    }

    /// `(a + a*) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Spectral norm ‖a − a*‖.
    pub fn asymmetry(&self) -> f64 {
        (self - &self.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.asymmetry() <= tol * (1.0 + self.norm())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let svd = SVD::try_new(self.inner.clone(), false, false, f64::EPSILON, EIGEN_ITER_BUDGET)
            .unwrap_or_else(|| SVD::new(self.inner.clone(), false, false));
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// The fiber C*-norm: the largest singular value.
    pub fn norm(&self) -> f64 {
        self.singular_values()[0]
    }

    pub fn min_singular_value(&self) -> f64 {
        *self.singular_values().last().expect("dim >= 1")
    }

    /// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
    ///
    /// The caller is responsible for deciding that the input is Hermitian.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let h = self.hermitian_part();
        let eig = SymmetricEigen::try_new(h.inner, f64::EPSILON, EIGEN_ITER_BUDGET)
            .ok_or(Error::EigenFailure(EIGEN_ITER_BUDGET))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = self.dim();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    /// Eigenvalues with multiplicity, sorted by `(re, im)`.
    ///
    /// Matrices that are Hermitian within [`DEFAULT_TOL`] go through the
    /// symmetric solver and get exactly real eigenvalues.
    pub fn spectrum(&self) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = if self.is_hermitian(DEFAULT_TOL) {
            self.hermitian_eigen()?
                .0
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect()
        } else {
            let schur = Schur::try_new(self.inner.clone(), f64::EPSILON, EIGEN_ITER_BUDGET)
                .ok_or(Error::EigenFailure(EIGEN_ITER_BUDGET))?;
            let (_, t) = schur.unpack();
            // complex Schur form is upper triangular
            t.diagonal().iter().copied().collect()
        };
        sort_spectrum(&mut out);
        Ok(out)
    }

    /// Hermitian within `tol` and no eigenvalue below `-tol * (1 + ‖a‖)`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let scale = tol * (1.0 + self.norm());
        if self.asymmetry() > scale {
            return false;
        }
        match self.hermitian_eigen() {
            Ok((values, _)) => values[0] >= -scale,
            Err(_) => false,
        }
    }

    /// The unique positive square root.
    pub fn sqrt(&self, tol: f64) -> Result<CMatrix> {
        if !self.is_positive(tol) {
            return Err(Error::NotPositive);
        }
        let (values, vectors) = self.hermitian_eigen()?;
        Ok(spectral_function(&values, &vectors, |v| v.max(0.0).sqrt()))
    }

    /// Inverse; `Singular` when the smallest singular value is at most
    /// `tol * (1 + ‖a‖)`.
    pub fn inverse(&self, tol: f64) -> Result<CMatrix> {
        let s = self.singular_values();
        if s[s.len() - 1] <= tol * (1.0 + s[0]) {
            return Err(Error::Singular { index: None });
        }
        let inv = self
            .inner
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { index: None })?;
        CMatrix::from_dmatrix(inv).map_err(|_| Error::Singular { index: None })
    }

    /// Largest absolute entry difference, for exact-ish comparisons.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `V f(Λ) V*` for a Hermitian eigen-decomposition.
pub(crate) fn spectral_function(
    values: &[f64],
    vectors: &DMatrix<Complex64>,
    f: impl Fn(f64) -> f64,
) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let fv = Complex64::new(f(v), 0.0);
        for r in 0..n {
            scaled[(r, c)] *= fv;
        }
    }
    CMatrix {
        inner: scaled * vectors.adjoint(),
    }
}

/// Spectral norm of the `(k·d) × d` column stack `[b_1; …; b_k]`, which equals
/// `‖Σ b_i* b_i‖^{1/2}`.
pub fn stacked_norm(blocks: &[CMatrix]) -> f64 {
    assert!(!blocks.is_empty(), "need at least one block");
    let d = blocks[0].dim();
    let stacked = DMatrix::from_fn(blocks.len() * d, d, |r, c| blocks[r / d].inner[(r % d, c)]);
    let svd = SVD::try_new(stacked.clone(), false, false, f64::EPSILON, EIGEN_ITER_BUDGET)
        .unwrap_or_else(|| SVD::new(stacked, false, false));
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}

/// Deterministic `(re, im)` ordering of a multiset of eigenvalues.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Hausdorff distance between two finite sets of complex numbers.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in add");
        CMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sub");
        CMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in mul");
        CMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix {
            inner: -&self.inner,
        }
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for row in self.rows() {
            let pairs: Vec<[f64; 2]> = row.iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&pairs)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(rows).map_err(de::Error::custom)
    }
}
