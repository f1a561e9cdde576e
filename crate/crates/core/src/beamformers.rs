//! Weight design: sample-matrix inversion, diagonal loading, the
//! worst-case norm-ball design, and the Kronecker-structured
//! probability-constrained designs solved by block coordinate descent.

use mimo_conic::{ProblemError, SolverSettings, Status};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_sqrt, kron, CMatrix, CVector, CholeskyFactor, HermitianMatrix, LinalgError, C64};
use crate::mismatch::MismatchSampler;
use crate::socp::{solve_complex_socp, ComplexConstraint, ComplexSocp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Transmit,
    Receive,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("covariance is singular or too ill-conditioned (condition {0:.3e})")]
    Singular(f64),
    #[error("design problem is infeasible")]
    Infeasible,
    #[error("{0:?} margin is not positive, so the coupled constraint cannot be met")]
    NonpositiveMargin(Side),
    #[error("probability {0} outside [0, 1)")]
    Domain(f64),
    #[error("conic solver stopped with status {0:?}")]
    Solver(Status),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Transmit weight `u`, receive weight `v` and the joint weight `w`.
/// For the Kronecker designs `w = u (x) v`; baselines only set `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub u: Option<CVector>,
    pub v: Option<CVector>,
    pub w: CVector,
}

impl BeamformerWeights {
    pub fn joint(w: CVector) -> Self {
        BeamformerWeights { u: None, v: None, w }
    }

    pub fn kronecker(u: CVector, v: CVector) -> Self {
        let w = kron(&u, &v);
        BeamformerWeights {
            u: Some(u),
            v: Some(v),
            w,
        }
    }
}

const MAX_CONDITION: f64 = 1e12;

/// `R^{-1} d / (d^H R^{-1} d)`.
pub fn smi(r: &HermitianMatrix, d: &CVector) -> Result<BeamformerWeights, BeamError> {
    let ev = r.matrix().clone().symmetric_eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(BeamError::Singular(cond));
    }
    let chol = r.matrix().clone().cholesky().ok_or(BeamError::Singular(cond))?;
    let x = chol.solve(d);
    let w = &x / d.dotc(&x).conj();
    Ok(BeamformerWeights::joint(w))
}

/// SMI on `R + gamma I`.
pub fn lsmi(r: &HermitianMatrix, d: &CVector, loading: f64) -> Result<BeamformerWeights, BeamError> {
    smi(&r.add_diagonal(loading), d)
}

/// `minimize w^H R w` subject to `Re(w^H d) - eps ||w|| >= 1`, `Im(w^H d) = 0`.
pub fn worst_case(
    r: &HermitianMatrix,
    d: &CVector,
    eps: f64,
    settings: &SolverSettings,
) -> Result<BeamformerWeights, BeamError> {
    if eps >= d.norm() {
        return Err(BeamError::Infeasible);
    }
    let n = d.len();
    let f = hermitian_sqrt(r)?.lower().adjoint();
    let p = ComplexSocp::new(f)
        .with(ComplexConstraint::NormBound {
            f: CMatrix::identity(n, n) * C64::new(eps, 0.0),
            a: d.clone(),
            b: 1.0,
        })
        .with(ComplexConstraint::ImagPartZero { a: d.clone() });
    let sol = solve_complex_socp(&p, settings)?;
    check_status(sol.status)?;
    Ok(BeamformerWeights::joint(sol.x))
}

fn check_status(s: Status) -> Result<(), BeamError> {
    match s {
        Status::Optimal => Ok(()),
        Status::Infeasible => Err(BeamError::Infeasible),
        other => Err(BeamError::Solver(other)),
    }
}

fn check_probability(eta: f64) -> Result<(), BeamError> {
    if (0.0..1.0).contains(&eta) {
        Ok(())
    } else {
        Err(BeamError::Domain(eta))
    }
}

/// Rayleigh-tail coefficient `sqrt(ln(1 / (1 - eta)))`.
pub fn gamma_gaussian(eta: f64) -> Result<f64, BeamError> {
    check_probability(eta)?;
    Ok((-(1.0 - eta).ln()).sqrt())
}

/// Chebyshev coefficient `1 / sqrt(1 - eta)`.
pub fn gamma_chebyshev(eta: f64) -> Result<f64, BeamError> {
    check_probability(eta)?;
    Ok(1.0 / (1.0 - eta).sqrt())
}

/// Which tail bound turns the chance constraint into a cone constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChanceModel {
    Gaussian,
    Chebyshev,
}

impl ChanceModel {
    pub fn gamma(self, eta: f64) -> Result<f64, BeamError> {
        match self {
            ChanceModel::Gaussian => gamma_gaussian(eta),
            ChanceModel::Chebyshev => gamma_chebyshev(eta),
        }
    }
}

/// `Re(x^H a) - gamma ||C^{1/2} x||`.
pub fn margin(x: &CVector, a: &CVector, c_sqrt: &CholeskyFactor, gamma: f64) -> f64 {
    x.dotc(a).re - gamma * c_sqrt.weighted_norm(x)
}

/// Quadratic form of `(u (x) v)^H R (u (x) v)` in `v`:
/// `R_v[j, l] = sum_{i,k} conj(u_i) u_k R[i M_r + j, k M_r + l]`.
pub fn receive_quadratic(r: &HermitianMatrix, u: &CVector) -> HermitianMatrix {
    let mt = u.len();
    let mr = r.dim() / mt;
    let rm = r.matrix();
    let mut out = CMatrix::zeros(mr, mr);
    for i in 0..mt {
        for k in 0..mt {
            let coef = u[i].conj() * u[k];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            let block = rm.view((i * mr, k * mr), (mr, mr));
            out.zip_apply(&block, |o, b| *o += coef * b);
        }
    }
    HermitianMatrix::symmetrize(out)
}

/// Quadratic form in `u`:
/// `R_u[i, k] = sum_{j,l} conj(v_j) v_l R[i M_r + j, k M_r + l]`.
pub fn transmit_quadratic(r: &HermitianMatrix, v: &CVector) -> HermitianMatrix {
    let mr = v.len();
    let mt = r.dim() / mr;
    let rm = r.matrix();
    let out = CMatrix::from_fn(mt, mt, |i, k| {
        let block = rm.view((i * mr, k * mr), (mr, mr));
        v.dotc(&(block * v))
    });
    HermitianMatrix::symmetrize(out)
}

fn side_subproblem(
    quad: &HermitianMatrix,
    a: &CVector,
    c_sqrt: &CholeskyFactor,
    gamma: f64,
    other_margin: f64,
    other: Side,
) -> Result<ComplexSocp, BeamError> {
    if other_margin <= 0.0 || !other_margin.is_finite() {
        return Err(BeamError::NonpositiveMargin(other));
    }
    let f = hermitian_sqrt(quad)?.lower().adjoint();
    Ok(ComplexSocp::new(f)
        .with(ComplexConstraint::NormBound {
            f: c_sqrt.lower().adjoint() * C64::new(gamma, 0.0),
            a: a.clone(),
            b: 1.0 / other_margin,
        })
        .with(ComplexConstraint::ImagPartZero { a: a.clone() }))
}

/// Receive step with `u` fixed: minimize `v^H R_v v` subject to
/// `Re(v^H a_r) - gamma2 ||C_r^{1/2} v|| >= 1 / c_t` and `Im(v^H a_r) = 0`.
pub fn build_receive_subproblem(
    r: &HermitianMatrix,
    u: &CVector,
    a_r: &CVector,
    c_r_sqrt: &CholeskyFactor,
    gamma2: f64,
    transmit_margin: f64,
) -> Result<ComplexSocp, BeamError> {
    side_subproblem(&receive_quadratic(r, u), a_r, c_r_sqrt, gamma2, transmit_margin, Side::Transmit)
}

/// Transmit step with `v` fixed; mirror image of [`build_receive_subproblem`].
pub fn build_transmit_subproblem(
    r: &HermitianMatrix,
    v: &CVector,
    a_t: &CVector,
    c_t_sqrt: &CholeskyFactor,
    gamma1: f64,
    receive_margin: f64,
) -> Result<ComplexSocp, BeamError> {
    side_subproblem(&transmit_quadratic(r, v), a_t, c_t_sqrt, gamma1, receive_margin, Side::Receive)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdSettings {
    /// Relative weight change below which both blocks count as settled.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: SolverSettings,
}

impl Default for BcdSettings {
    fn default() -> Self {
        BcdSettings {
            tolerance: 1e-4,
            max_iterations: 50,
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdOutcome {
    pub weights: BeamformerWeights,
    /// `(u (x) v)^H R (u (x) v)` after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iterations` ran out first; the weights are still usable.
    pub converged: bool,
}

fn solve_block(p: &ComplexSocp, settings: &SolverSettings) -> Result<CVector, BeamError> {
    let sol = solve_complex_socp(p, settings)?;
    check_status(sol.status)?;
    Ok(sol.x)
}

fn relative_change(new: &CVector, old: &CVector) -> f64 {
    (new - old).norm() / old.norm().max(f64::MIN_POSITIVE)
}

/// Alternating receive/transmit SOCP solves starting from
/// `u = a_t / ||a_t||`. A block update is kept only when it does not raise
/// that block's objective. `u` is renormalized to unit norm after every
/// transmit step, and on return `u` and `v` are rescaled (leaving `w`
/// unchanged) so that both per-side margins are equal.
#[allow(clippy::too_many_arguments)]
pub fn bcd_solve(
    r: &HermitianMatrix,
    a_t: &CVector,
    a_r: &CVector,
    c_t: &HermitianMatrix,
    c_r: &HermitianMatrix,
    gamma1: f64,
    gamma2: f64,
    settings: &BcdSettings,
) -> Result<BcdOutcome, BeamError> {
    let lt = hermitian_sqrt(c_t)?;
    let lr = hermitian_sqrt(c_r)?;
    let mut u = a_t.unscale(a_t.norm());
    let mut ct = margin(&u, a_t, &lt, gamma1);
    let mut v: Option<CVector> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        iterations += 1;
        let rv = receive_quadratic(r, &u);
        let cand = solve_block(&build_receive_subproblem(r, &u, a_r, &lr, gamma2, ct)?, &settings.solver)?;
        let v_next = match &v {
            Some(old) if rv.quadratic_form(&cand) > rv.quadratic_form(old) => old.clone(),
            _ => cand,
        };
        let cr = margin(&v_next, a_r, &lr, gamma2);

        let ru = transmit_quadratic(r, &v_next);
        let cand = solve_block(&build_transmit_subproblem(r, &v_next, a_t, &lt, gamma1, cr)?, &settings.solver)?;
        let u_raw = if ru.quadratic_form(&cand) > ru.quadratic_form(&u) { u.clone() } else { cand };
        let scale = u_raw.norm();
        let u_next = u_raw.unscale(scale);
        let v_next = v_next * C64::new(scale, 0.0);

        trace.push(r.quadratic_form(&kron(&u_next, &v_next)));
        let settled = match &v {
            Some(v_old) => {
                relative_change(&u_next, &u) < settings.tolerance && relative_change(&v_next, v_old) < settings.tolerance
            }
            None => false,
        };
        u = u_next;
        v = Some(v_next);
        ct = margin(&u, a_t, &lt, gamma1);
        if settled {
            converged = true;
            break;
        }
    }

    let mut v = v.ok_or(BeamError::Infeasible)?;
    let cr = margin(&v, a_r, &lr, gamma2);
    if ct > 0.0 && cr > 0.0 {
        let k = (cr / ct).sqrt();
        u *= C64::new(k, 0.0);
        v.unscale_mut(k);
    }
    Ok(BcdOutcome {
        weights: BeamformerWeights::kronecker(u, v),
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Probability-constrained design with `eta1 eta2 = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilisticDesign {
    pub model: ChanceModel,
    pub eta1: f64,
    pub eta2: f64,
}

impl ProbabilisticDesign {
    pub fn gammas(&self) -> Result<(f64, f64), BeamError> {
        Ok((self.model.gamma(self.eta1)?, self.model.gamma(self.eta2)?))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn design(
        &self,
        r: &HermitianMatrix,
        a_t: &CVector,
        a_r: &CVector,
        c_t: &HermitianMatrix,
        c_r: &HermitianMatrix,
        settings: &BcdSettings,
    ) -> Result<BcdOutcome, BeamError> {
        let (g1, g2) = self.gammas()?;
        bcd_solve(r, a_t, a_r, c_t, c_r, g1, g2, settings)
    }
}

/// Fraction of `n` draws `e` with `|x^H (a + e)| >= 1`.
pub fn empirical_constraint_probability(
    x: &CVector,
    a: &CVector,
    sampler: &dyn MismatchSampler,
    n: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let base = x.dotc(a);
    let hits = (0..n).filter(|_| (base + x.dotc(&sampler.draw(rng))).norm() >= 1.0).count();
    hits as f64 / n.max(1) as f64
}

/// `R + 1e-6 tr(R) / dim I`.
pub fn regularize_covariance(r: &HermitianMatrix) -> HermitianMatrix {
    r.add_diagonal(1e-6 * r.trace() / r.dim() as f64)
}
