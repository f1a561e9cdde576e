#![allow(dead_code)]

use mimo_rab::linalg::{CMatrix, CVector, HermitianMatrix, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_cvector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `M^H M` scaled to trace `trace`, optionally rank-deficient.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, trace: f64) -> HermitianMatrix {
    let m = random_cmatrix(rng, rank, n);
    let c = HermitianMatrix::symmetrize(m.adjoint() * &m);
    let t = c.trace();
    c.scaled(trace / t)
}

/// Exact `Pr{|mu + z| >= 1}` for `z ~ CN(0, s2)`, i.e. the Marcum function
/// `Q_1(sqrt(2) |mu| / s, sqrt(2) / s)`, by quadrature of the complex
/// Gaussian density over the unit disk in polar coordinates. The angular
/// integral uses the trapezoid rule (spectrally accurate for periodic
/// integrands) and the radial integral composite Simpson.
pub fn gaussian_exceedance(mu: C64, s2: f64) -> f64 {
    if s2 <= 0.0 {
        return if mu.norm() >= 1.0 { 1.0 } else { 0.0 };
    }
    let m = mu.norm();
    let nr = 4000;
    let nphi = 512;
    let h = 1.0 / nr as f64;
    let dphi = std::f64::consts::TAU / nphi as f64;
    let cos: Vec<f64> = (0..nphi).map(|k| (k as f64 * dphi).cos()).collect();
    let radial = |r: f64| -> f64 {
        let s: f64 = cos
            .iter()
            .map(|c| (-(r * r + m * m - 2.0 * r * m * c) / s2).exp())
            .sum();
        r * s * dphi / (std::f64::consts::PI * s2)
    };
    let mut acc = radial(0.0) + radial(1.0);
    for i in 1..nr {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * radial(i as f64 * h);
    }
    let inside = acc * h / 3.0;
    (1.0 - inside).clamp(0.0, 1.0)
}

/// Three binomial standard deviations at probability `p` with `n` draws.
pub fn binomial_band(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
