//! Uniform linear arrays and the MIMO virtual array.

use serde::{Deserialize, Serialize};

use crate::linalg::{kron, CVector, C64};

/// A uniform linear array; `spacing` is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub elements: usize,
    #[serde(default = "half_wavelength")]
    pub spacing: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn ula(elements: usize) -> Self {
        ArrayGeometry {
            elements,
            spacing: 0.5,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.elements >= 1 && self.spacing > 0.0 && self.spacing.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub angle_deg: f64,
    pub response: CVector,
}

/// Element `m` is `exp(j 2 pi spacing m sin(theta))`, referenced to element 0.
/// `theta_deg` is expected in `[-90, 90]`.
pub fn steering(geom: &ArrayGeometry, theta_deg: f64) -> SteeringVector {
    let phase = 2.0 * std::f64::consts::PI * geom.spacing * theta_deg.to_radians().sin();
    SteeringVector {
        angle_deg: theta_deg,
        response: CVector::from_fn(geom.elements, |m, _| C64::from_polar(1.0, phase * m as f64)),
    }
}

/// `a_t (x) a_r`, of length `M_t M_r`.
pub fn virtual_steering(a_t: &SteeringVector, a_r: &SteeringVector) -> CVector {
    kron(&a_t.response, &a_r.response)
}

/// Upper bound on `||a_t (x) e_r + e_t (x) a_r + e_t (x) e_r||` when
/// `||e_t|| <= eps_t` and `||e_r|| <= eps_r`.
pub fn mismatch_norm_bound(eps_t: f64, eps_r: f64, m_t: usize, m_r: usize) -> f64 {
    (m_t as f64).sqrt() * eps_r + (m_r as f64).sqrt() * eps_t + eps_t * eps_r
}
