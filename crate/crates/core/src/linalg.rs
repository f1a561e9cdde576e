//! Dense complex helpers: Hermitian matrices, semidefinite Cholesky,
//! Kronecker products and the real embedding used by the conic solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (pivot {pivot:.3e} at index {index})")]
    NotPsd { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian to 1e-12 relative Frobenius error and
    /// stores the exactly symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let scale = m.norm();
        let asym = (&m - m.adjoint()).norm();
        if asym > 1e-12 * scale {
            return Err(LinalgError::NotHermitian(asym / scale));
        }
        Ok(Self::symmetrize(m))
    }

    /// `(m + m^H) / 2`, for matrices that are Hermitian up to rounding.
    pub fn symmetrize(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        HermitianMatrix(h)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(d[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `x^H M x`, real for Hermitian `M`.
    pub fn quadratic_form(&self, x: &CVector) -> f64 {
        x.dotc(&(&self.0 * x)).re
    }

    pub fn scaled(&self, t: f64) -> Self {
        HermitianMatrix(self.0.map(|z| z * t))
    }

    /// Adds `t` to every diagonal entry.
    pub fn add_diagonal(&self, t: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += t;
        }
        HermitianMatrix(m)
    }

    /// Keeps only the diagonal.
    pub fn diagonal_part(&self) -> Self {
        let d: Vec<f64> = (0..self.dim()).map(|i| self.0[(i, i)].re).collect();
        Self::from_real_diagonal(&d)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Lower-triangular `L` with nonnegative real diagonal and `L L^H = C`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor(CMatrix);

impl CholeskyFactor {
    pub fn lower(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `||L^H x||`, which equals `sqrt(x^H C x)`.
    pub fn weighted_norm(&self, x: &CVector) -> f64 {
        self.0.ad_mul(x).norm()
    }

    /// `L z`: maps a white vector to one with covariance `C`.
    pub fn color(&self, z: &CVector) -> CVector {
        &self.0 * z
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }
}

pub fn kron(a: &CVector, b: &CVector) -> CVector {
    let m = b.len();
    CVector::from_fn(a.len() * m, |k, _| a[k / m] * b[k % m])
}

/// Cholesky factorization that tolerates semidefinite input.
///
/// Pivots below `-1e-10 * trace` are rejected; pivots up to `1e-12 * trace`
/// are treated as exact zeros and their column is left empty.
pub fn hermitian_sqrt(c: &HermitianMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = c.dim();
    let a = c.matrix();
    let tr = c.trace().max(0.0);
    let reject = -1e-10 * tr;
    let zero = 1e-12 * tr;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < reject || (tr == 0.0 && d < 0.0) {
            return Err(LinalgError::NotPsd { index: j, pivot: d });
        }
        if d <= zero {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholeskyFactor(l))
}

/// `z -> (Re z; Im z)`.
pub fn embed_vector(z: &CVector) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

/// Inverse of [`embed_vector`].
pub fn unembed_vector(x: &[f64]) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(x[i], x[n + i]))
}

/// `M -> [[Re M, -Im M], [Im M, Re M]]`, so that
/// `embed_vector(M z) = embed_matrix(M) embed_vector(z)`.
pub fn embed_matrix(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
