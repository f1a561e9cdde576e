//! Distribution-free lower bound on `Pr{|v^H (a + e)| >= 1}` over all
//! zero-mean `e` with covariance `C`.
//!
//! With `e~ = (e; 1)`, `C~ = diag(C, 1)` and
//! `A = [[v v^H, v v^H a], [a^H v v^H, a^H v v^H a - 1]]`, the bound is
//!
//! ```text
//! maximize  tr(Z C~)
//! s.t.      Z <= diag(0, ..., 0, 1)
//!           Z <= lambda A,  lambda >= 0
//! ```
//!
//! over Hermitian `Z`. Any feasible `(Z, lambda)` gives
//! `e~^H Z e~ <= 1{|v^H (a + e)| >= 1}` pointwise, hence the bound.

use mimo_conic::cones::svec;
use mimo_conic::{solve, Cone, ConicProblem, ProblemError, SolverSettings, Status};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::linalg::{embed_matrix, CMatrix, CVector, CholeskyFactor, HermitianMatrix, LinalgError, C64};
use crate::mismatch::{complex_normal_vector, MismatchSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("conic solver stopped with status {0:?}")]
    Solver(Status),
    #[error("sampler {name} does not match the prescribed moments ({detail})")]
    MomentMismatch { name: String, detail: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// The matrices `A` and `C~`.
pub fn assemble_dual_data(
    v: &CVector,
    a: &CVector,
    c: &HermitianMatrix,
) -> Result<(HermitianMatrix, HermitianMatrix), BoundError> {
    let m = v.len();
    for found in [a.len(), c.dim()] {
        if found != m {
            return Err(BoundError::DimensionMismatch { expected: m, found });
        }
    }
    Ok(dual_data(v, v.dotc(a), c.matrix()))
}

/// `A` and `C~` for the event `|v^H e + offset| >= 1`.
fn dual_data(v: &CVector, offset: C64, c: &CMatrix) -> (HermitianMatrix, HermitianMatrix) {
    let m = v.len();
    let u = CVector::from_fn(m + 1, |i, _| if i < m { v[i] } else { offset.conj() });
    let mut am = &u * u.adjoint();
    am[(m, m)] -= C64::new(1.0, 0.0);
    let mut ct = CMatrix::zeros(m + 1, m + 1);
    ct.view_mut((0, 0), (m, m)).copy_from(c);
    ct[(m, m)] = C64::new(1.0, 0.0);
    (HermitianMatrix::symmetrize(am), HermitianMatrix::symmetrize(ct))
}

/// Solution of the bound SDP. When `C` is rank deficient every admissible
/// `e` lies in its range, so the SDP is posed over coordinates `xi` with
/// `e = basis xi`; `z` and `a` then have dimension `rank + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub z: HermitianMatrix,
    pub lambda: f64,
    /// `tr(Z C~)` clamped to `[0, 1]`.
    pub bound: f64,
    pub raw_bound: f64,
    pub status: Status,
    /// Orthonormal basis of the range of `C` (`M x rank`).
    pub basis: CMatrix,
    /// The `A` matrix the certificate was computed against.
    pub a: HermitianMatrix,
}

impl DualCertificate {
    /// Largest eigenvalues of `Z - diag(0, .., 0, 1)` and `Z - lambda A`;
    /// both are `<= 0` for an exactly feasible certificate.
    pub fn constraint_violation(&self) -> (f64, f64) {
        let n = self.z.dim();
        let mut d = self.z.matrix().clone();
        d[(n - 1, n - 1)] -= C64::new(1.0, 0.0);
        let first = max_eigenvalue(&d);
        let second = max_eigenvalue(&(self.z.matrix() - self.a.matrix() * C64::new(self.lambda, 0.0)));
        (first, second)
    }
}

fn max_eigenvalue(m: &CMatrix) -> f64 {
    HermitianMatrix::symmetrize(m.clone())
        .eigenvalues()
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Real basis of `n x n` Hermitian matrices: diagonal units, then the
/// symmetric and antisymmetric parts of each `(i, j)` pair with `i > j`.
fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = CMatrix::zeros(n, n);
        e[(i, i)] = C64::new(1.0, 0.0);
        out.push(e);
    }
    for j in 0..n {
        for i in j + 1..n {
            let mut re = CMatrix::zeros(n, n);
            re[(i, j)] = C64::new(1.0, 0.0);
            re[(j, i)] = C64::new(1.0, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(n, n);
            im[(i, j)] = C64::new(0.0, 1.0);
            im[(j, i)] = C64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

fn svec_embedded(m: &CMatrix) -> DVector<f64> {
    svec(&embed_matrix(m))
}

/// Eigenvalues of `C` below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-9;

/// Orthonormal eigenvectors spanning the numerical range of `C`.
fn range_basis(c: &HermitianMatrix) -> CMatrix {
    let eig = c.matrix().clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(*e));
    let keep: Vec<usize> = (0..c.dim()).filter(|&i| top > 0.0 && eig.eigenvalues[i] > RANK_TOLERANCE * top).collect();
    CMatrix::from_fn(c.dim(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

pub fn tight_lower_bound(
    v: &CVector,
    a: &CVector,
    c: &HermitianMatrix,
    settings: &SolverSettings,
) -> Result<DualCertificate, BoundError> {
    assemble_dual_data(v, a, c)?;
    let basis = if range_basis(c).ncols() == c.dim() {
        CMatrix::identity(c.dim(), c.dim())
    } else {
        range_basis(c)
    };
    let reduced_v = basis.adjoint() * v;
    let reduced_c = basis.adjoint() * c.matrix() * &basis;
    let (am, ct) = dual_data(&reduced_v, v.dotc(a), &reduced_c);
    let n = am.dim();
    let hb = hermitian_basis(n);
    let nz = hb.len();
    let nv = nz + 1;
    let cols: Vec<DVector<f64>> = hb.iter().map(svec_embedded).collect();
    let k = cols[0].len();

    let mut g = DMatrix::zeros(2 * k + 1, nv);
    let mut h = DVector::zeros(2 * k + 1);
    for (j, col) in cols.iter().enumerate() {
        g.view_mut((0, j), (k, 1)).copy_from(col);
        g.view_mut((k, j), (k, 1)).copy_from(col);
    }
    let mut dm = CMatrix::zeros(n, n);
    dm[(n - 1, n - 1)] = C64::new(1.0, 0.0);
    h.rows_mut(0, k).copy_from(&svec_embedded(&dm));
    g.view_mut((k, nz), (k, 1)).copy_from(&(-svec_embedded(am.matrix())));
    g[(2 * k, nz)] = -1.0;

    let mut cvec = DVector::zeros(nv);
    for (j, e) in hb.iter().enumerate() {
        cvec[j] = -(e * ct.matrix()).trace().re;
    }
    let p = ConicProblem::new(cvec, g, h, vec![Cone::Psd(2 * n), Cone::Psd(2 * n), Cone::Nonnegative(1)]);
    let sol = solve(&p, settings)?;
    if sol.status != Status::Optimal {
        return Err(BoundError::Solver(sol.status));
    }
    let mut z = CMatrix::zeros(n, n);
    for (j, e) in hb.iter().enumerate() {
        z += e * C64::new(sol.x[j], 0.0);
    }
    let z = HermitianMatrix::symmetrize(z);
    let raw = (z.matrix() * ct.matrix()).trace().re;
    Ok(DualCertificate {
        z,
        lambda: sol.x[nz],
        bound: raw.clamp(0.0, 1.0),
        raw_bound: raw,
        status: sol.status,
        basis,
        a: am,
    })
}

/// `+-sqrt(M) C^{1/2} s` with `s` uniform on the complex unit sphere and an
/// independent fair sign.
#[derive(Debug, Clone)]
pub struct TwoPointSampler {
    pub factor: CholeskyFactor,
}

impl MismatchSampler for TwoPointSampler {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> CVector {
        let m = self.dim();
        let g = complex_normal_vector(m, rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let s = g.unscale(g.norm()) * C64::new(sign * (m as f64).sqrt(), 0.0);
        self.factor.color(&s)
    }
}

/// `C^{1/2} x` with independent uniform-phase unit-modulus entries `x_i`.
#[derive(Debug, Clone)]
pub struct UniformPhaseSampler {
    pub factor: CholeskyFactor,
}

impl MismatchSampler for UniformPhaseSampler {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> CVector {
        let x = CVector::from_fn(self.dim(), |_, _| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)));
        self.factor.color(&x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerReport {
    pub name: String,
    pub empirical: f64,
    /// Three binomial standard deviations at the bound.
    pub slack: f64,
    pub passed: bool,
}

/// Checks the bound against empirical probabilities of moment-matched
/// samplers. Each sampler's mean and covariance are verified first, with a
/// five-sigma tolerance derived from the same draws.
pub fn adversarial_probability_check(
    v: &CVector,
    a: &CVector,
    c: &HermitianMatrix,
    bound: f64,
    samplers: &[(&str, &dyn MismatchSampler)],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<SamplerReport>, BoundError> {
    let m = v.len();
    let cf2 = c.matrix().norm_squared();
    let base = v.dotc(a);
    let p = bound.clamp(0.0, 1.0);
    let slack = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let mut out = Vec::new();
    for (name, sampler) in samplers {
        if sampler.dim() != m {
            return Err(BoundError::DimensionMismatch {
                expected: m,
                found: sampler.dim(),
            });
        }
        let mut mean = CVector::zeros(m);
        let mut second = CMatrix::zeros(m, m);
        let mut spread = 0.0;
        let mut hits = 0usize;
        for _ in 0..n {
            let e = sampler.draw(rng);
            let e2 = e.norm_squared();
            spread += e2 * e2 - 2.0 * c.quadratic_form(&e) + cf2;
            mean += &e;
            second.gerc(C64::new(1.0, 0.0), &e, &e, C64::new(1.0, 0.0));
            if (base + v.dotc(&e)).norm() >= 1.0 {
                hits += 1;
            }
        }
        let nf = n as f64;
        let mean_err = mean.norm() / nf;
        let cov_err = (second.unscale(nf) - c.matrix()).norm();
        let mean_tol = 5.0 * (c.trace() / nf).sqrt() + 1e-12;
        let cov_tol = 5.0 * (spread / nf / nf).sqrt() + 1e-12;
        if mean_err > mean_tol || cov_err > cov_tol {
            return Err(BoundError::MomentMismatch {
                name: name.to_string(),
                detail: format!("mean error {mean_err:.3e} (tol {mean_tol:.3e}), covariance error {cov_err:.3e} (tol {cov_tol:.3e})"),
            });
        }
        let empirical = hits as f64 / nf;
        out.push(SamplerReport {
            name: name.to_string(),
            empirical,
            slack,
            passed: empirical >= bound - slack,
        });
    }
    Ok(out)
}
