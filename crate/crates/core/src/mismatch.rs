//! Random steering-vector errors and second-moment estimation.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{steering, ArrayGeometry};
use crate::linalg::{hermitian_sqrt, CMatrix, CVector, CholeskyFactor, HermitianMatrix, LinalgError, C64};

/// Standard circular complex Gaussian entry, `E|z|^2 = 1`.
pub fn complex_normal(rng: &mut dyn RngCore) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vector(n: usize, rng: &mut dyn RngCore) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

/// Anything that produces zero-mean mismatch vectors.
pub trait MismatchSampler: Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut dyn RngCore) -> CVector;
}

/// Circular Gaussian mismatch `C^{1/2} z`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: CholeskyFactor,
}

impl GaussianSampler {
    pub fn new(c: &HermitianMatrix) -> Result<Self, LinalgError> {
        Ok(GaussianSampler {
            factor: hermitian_sqrt(c)?,
        })
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }
}

impl MismatchSampler for GaussianSampler {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> CVector {
        self.factor.color(&complex_normal_vector(self.dim(), rng))
    }
}

/// One Gaussian draw with covariance `c`.
pub fn draw_gaussian(c: &HermitianMatrix, rng: &mut dyn RngCore) -> Result<CVector, LinalgError> {
    Ok(GaussianSampler::new(c)?.draw(rng))
}

/// Scattered-path mismatch around a nominal direction:
/// `e = sigma / sqrt(M N) * sum_n exp(j psi_n) a(theta0 + theta_n)` with
/// uniform phases and uniform angular offsets in `[-halfwidth, halfwidth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiceanSpec {
    pub power: f64,
    pub paths: usize,
    pub halfwidth_deg: f64,
    pub geometry: ArrayGeometry,
}

impl RiceanSpec {
    pub fn is_valid(&self) -> bool {
        self.power >= 0.0 && self.paths >= 1 && self.halfwidth_deg >= 0.0 && self.geometry.is_valid()
    }
}

pub fn draw_ricean(spec: &RiceanSpec, theta0_deg: f64, rng: &mut dyn RngCore) -> CVector {
    let m = spec.geometry.elements;
    let mut e = CVector::zeros(m);
    for _ in 0..spec.paths {
        let psi = rng.random_range(0.0..std::f64::consts::TAU);
        let offset = if spec.halfwidth_deg > 0.0 {
            rng.random_range(-spec.halfwidth_deg..=spec.halfwidth_deg)
        } else {
            0.0
        };
        let a = steering(&spec.geometry, theta0_deg + offset).response;
        e.axpy(C64::from_polar(1.0, psi), &a, C64::new(1.0, 0.0));
    }
    let scale = (spec.power / (m * spec.paths) as f64).sqrt();
    e * C64::new(scale, 0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct RiceanSampler {
    pub spec: RiceanSpec,
    pub theta0_deg: f64,
}

impl MismatchSampler for RiceanSampler {
    fn dim(&self) -> usize {
        self.spec.geometry.elements
    }

    fn draw(&self, rng: &mut dyn RngCore) -> CVector {
        draw_ricean(&self.spec, self.theta0_deg, rng)
    }
}

/// Either mismatch model.
#[derive(Debug, Clone)]
pub enum MismatchSpec {
    Gaussian(HermitianMatrix),
    Ricean(RiceanSpec),
}

/// `(1/K) sum e_k e_k^H`.
pub fn estimate_covariance(samples: &[CVector]) -> Result<HermitianMatrix, LinalgError> {
    let n = samples.first().map_or(0, |s| s.len());
    if samples.is_empty() {
        return Err(LinalgError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut acc = CMatrix::zeros(n, n);
    for s in samples {
        if s.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: s.len(),
            });
        }
        acc.gerc(C64::new(1.0, 0.0), s, s, C64::new(1.0, 0.0));
    }
    let k = samples.len() as f64;
    Ok(HermitianMatrix::symmetrize(acc.unscale(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_covariance_draws_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = draw_gaussian(&HermitianMatrix::zeros(4), &mut rng).unwrap();
        assert_eq!(e, CVector::zeros(4));
    }

    #[test]
    fn zero_power_ricean_is_zero() {
        let spec = RiceanSpec {
            power: 0.0,
            paths: 10,
            halfwidth_deg: 2.5,
            geometry: ArrayGeometry::ula(10),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(draw_ricean(&spec, 3.0, &mut rng).norm(), 0.0);
    }

    #[test]
    fn single_sample_is_rank_one() {
        let e = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0)]);
        let c = estimate_covariance(std::slice::from_ref(&e)).unwrap();
        assert!((c.matrix() - &e * e.adjoint()).norm() < 1e-15);
        let ev = c.eigenvalues();
        assert!(ev[0].abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = CVector::zeros(2);
        let b = CVector::zeros(3);
        assert!(matches!(
            estimate_covariance(&[a, b]),
            Err(LinalgError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }
}
