//! Post-matched-filter snapshot synthesis and the output-SINR metric.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{steering, virtual_steering, ArrayGeometry};
use crate::linalg::{CMatrix, CVector, HermitianMatrix, C64};
use crate::mismatch::complex_normal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("steering vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("beamformer weight is zero")]
    ZeroWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interferer {
    pub angle_deg: f64,
    pub inr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub target_angle_deg: f64,
    #[serde(default)]
    pub interferers: Vec<Interferer>,
    #[serde(default = "unit")]
    pub noise_power: f64,
    pub snapshots: usize,
    pub transmit: ArrayGeometry,
    pub receive: ArrayGeometry,
    /// Whether the training snapshots contain the target echo.
    #[serde(default = "yes")]
    pub signal_in_training: bool,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn virtual_dim(&self) -> usize {
        self.transmit.elements * self.receive.elements
    }

    /// `sigma_N^2 10^(snr/10)`.
    pub fn signal_power(&self, snr_db: f64) -> f64 {
        self.noise_power * db_to_linear(snr_db)
    }

    /// Nominal virtual steering vectors of the interferers.
    pub fn interferer_steering(&self) -> Vec<CVector> {
        self.interferers
            .iter()
            .map(|i| {
                virtual_steering(
                    &steering(&self.transmit, i.angle_deg),
                    &steering(&self.receive, i.angle_deg),
                )
            })
            .collect()
    }

    pub fn nominal_target(&self) -> CVector {
        virtual_steering(
            &steering(&self.transmit, self.target_angle_deg),
            &steering(&self.receive, self.target_angle_deg),
        )
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `L` virtual snapshots stored as the columns of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub data: CMatrix,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }
}

/// Unit-power random components of one trial's snapshots. Scaling them by
/// source powers lets every SNR point reuse the same draws.
#[derive(Debug, Clone)]
pub struct SnapshotDraws {
    target: CVector,
    interferers: Vec<CVector>,
    noise: CMatrix,
}

impl SnapshotDraws {
    pub fn draw(cfg: &ScenarioConfig, rng: &mut dyn RngCore) -> Self {
        let l = cfg.snapshots;
        let target = CVector::from_fn(l, |_, _| complex_normal(rng));
        let interferers = cfg
            .interferers
            .iter()
            .map(|_| CVector::from_fn(l, |_, _| complex_normal(rng)))
            .collect();
        let noise = CMatrix::from_fn(cfg.virtual_dim(), l, |_, _| complex_normal(rng));
        SnapshotDraws {
            target,
            interferers,
            noise,
        }
    }

    /// `y(tau) = beta(tau) d + sum_i beta_i(tau) d_i + n(tau)`.
    pub fn assemble(
        &self,
        cfg: &ScenarioConfig,
        snr_db: f64,
        target: &CVector,
        interferers: &[CVector],
    ) -> Result<SnapshotSet, ScenarioError> {
        let dim = cfg.virtual_dim();
        check_dim(dim, target)?;
        for d in interferers {
            check_dim(dim, d)?;
        }
        let mut data = self.noise.map(|z| z * cfg.noise_power.sqrt());
        if cfg.signal_in_training {
            let amp = cfg.signal_power(snr_db).sqrt();
            data.gerc(C64::new(amp, 0.0), target, &self.target.conjugate(), C64::new(1.0, 0.0));
        }
        for ((d, beta), spec) in interferers.iter().zip(&self.interferers).zip(&cfg.interferers) {
            let amp = (cfg.noise_power * db_to_linear(spec.inr_db)).sqrt();
            data.gerc(C64::new(amp, 0.0), d, &beta.conjugate(), C64::new(1.0, 0.0));
        }
        Ok(SnapshotSet { data })
    }
}

fn check_dim(expected: usize, v: &CVector) -> Result<(), ScenarioError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(ScenarioError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    }
}

/// Draws and assembles one snapshot set. `interferers` must follow the
/// order of `cfg.interferers`.
pub fn synthesize_snapshots(
    cfg: &ScenarioConfig,
    snr_db: f64,
    target: &CVector,
    interferers: &[CVector],
    rng: &mut dyn RngCore,
) -> Result<SnapshotSet, ScenarioError> {
    SnapshotDraws::draw(cfg, rng).assemble(cfg, snr_db, target, interferers)
}

/// `(1/L) sum y y^H`.
pub fn sample_covariance(s: &SnapshotSet) -> HermitianMatrix {
    let l = s.len().max(1) as f64;
    HermitianMatrix::symmetrize((&s.data * s.data.adjoint()).unscale(l))
}

/// Interference-plus-noise covariance `sum_i sigma_i^2 d_i d_i^H + sigma_N^2 I`.
pub fn true_in_covariance(cfg: &ScenarioConfig, interferers: &[CVector]) -> HermitianMatrix {
    let n = cfg.virtual_dim();
    let mut r = CMatrix::identity(n, n) * C64::new(cfg.noise_power, 0.0);
    for (d, spec) in interferers.iter().zip(&cfg.interferers) {
        let p = cfg.noise_power * db_to_linear(spec.inr_db);
        r.gerc(C64::new(p, 0.0), d, d, C64::new(1.0, 0.0));
    }
    HermitianMatrix::symmetrize(r)
}

/// `sigma^2 |w^H d|^2 / (w^H R w)` on a linear scale.
pub fn output_sinr_linear(w: &CVector, d: &CVector, signal_power: f64, r_in: &HermitianMatrix) -> Result<f64, ScenarioError> {
    if w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(ScenarioError::ZeroWeight);
    }
    Ok(signal_power * w.dotc(d).norm_sqr() / r_in.quadratic_form(w))
}

/// Output SINR in dB.
pub fn output_sinr(w: &CVector, d: &CVector, signal_power: f64, r_in: &HermitianMatrix) -> Result<f64, ScenarioError> {
    output_sinr_linear(w, d, signal_power, r_in).map(linear_to_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(interferers: Vec<Interferer>) -> ScenarioConfig {
        ScenarioConfig {
            target_angle_deg: 3.0,
            interferers,
            noise_power: 1.0,
            snapshots: 8,
            transmit: ArrayGeometry::ula(3),
            receive: ArrayGeometry::ula(2),
            signal_in_training: true,
        }
    }

    #[test]
    fn matched_filter_gain() {
        let cfg = ScenarioConfig {
            transmit: ArrayGeometry::ula(10),
            receive: ArrayGeometry::ula(10),
            ..small(vec![])
        };
        let d = cfg.nominal_target();
        let r = true_in_covariance(&cfg, &[]);
        let s = output_sinr(&d, &d, 1.0, &r).unwrap();
        assert!((s - 20.0).abs() < 1e-12);
        let s5 = output_sinr(&(&d * C64::new(5.0, 0.0)), &d, 1.0, &r).unwrap();
        assert!((s - s5).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_is_rejected() {
        let cfg = small(vec![]);
        let d = cfg.nominal_target();
        let r = true_in_covariance(&cfg, &[]);
        assert_eq!(
            output_sinr(&CVector::zeros(d.len()), &d, 1.0, &r),
            Err(ScenarioError::ZeroWeight)
        );
    }

    #[test]
    fn noiseless_single_source_is_rank_one() {
        let cfg = ScenarioConfig {
            noise_power: 0.0,
            ..small(vec![])
        };
        let d = cfg.nominal_target();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = synthesize_snapshots(&cfg, 0.0, &d, &[], &mut rng).unwrap();
        for col in s.data.column_iter() {
            let coef = d.dotc(&col) / C64::new(d.norm_squared(), 0.0);
            assert!((col - &d * coef).norm() < 1e-12);
        }
    }

    #[test]
    fn trace_identity() {
        let cfg = small(vec![Interferer {
            angle_deg: 40.0,
            inr_db: 10.0,
        }]);
        let d = cfg.nominal_target();
        let di = cfg.interferer_steering();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = synthesize_snapshots(&cfg, 3.0, &d, &di, &mut rng).unwrap();
        let r = sample_covariance(&s);
        let direct: f64 = s.data.column_iter().map(|c| c.norm_squared()).sum::<f64>() / s.len() as f64;
        assert!((r.trace() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn wrong_steering_length() {
        let cfg = small(vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bad = CVector::zeros(5);
        assert_eq!(
            synthesize_snapshots(&cfg, 0.0, &bad, &[], &mut rng),
            Err(ScenarioError::DimensionMismatch { expected: 6, found: 5 })
        );
    }
}
