//! Per-cone arithmetic used by the interior-point iteration: Jordan
//! products, Nesterov-Todd scalings and step-length computations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::problem::Cone;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Position of entry `(i, j)`, `i >= j`, inside the `svec` of an `n x n` matrix.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * (2 * n - j + 1) / 2 + (i - j)
}

/// Side length `n` of a matrix whose `svec` has length `len`.
pub fn svec_side(len: usize) -> usize {
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    debug_assert_eq!(n * (n + 1) / 2, len);
    n
}

pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(n * (n + 1) / 2);
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)];
        k += 1;
        for i in j + 1..n {
            out[k] = SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
    out
}

pub fn smat(v: &[f64]) -> DMatrix<f64> {
    let n = svec_side(v.len());
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Identity element of the cone, written into `out`.
pub fn identity(cone: Cone, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match cone {
        Cone::Nonnegative(_) => out.iter_mut().for_each(|v| *v = 1.0),
        Cone::SecondOrder(_) => out[0] = 1.0,
        Cone::Psd(n) => {
            for j in 0..n {
                out[svec_index(n, j, j)] = 1.0;
            }
        }
    }
}

/// Smallest `alpha` such that `x + alpha * e` lies in the cone (negative when
/// `x` is already interior).
pub fn interior_shift(cone: Cone, x: &[f64]) -> f64 {
    match cone {
        Cone::Nonnegative(_) => x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(-v)),
        Cone::SecondOrder(_) => norm(&x[1..]) - x[0],
        Cone::Psd(_) => {
            let eig = SymmetricEigen::new(smat(x)).eigenvalues;
            -eig.min()
        }
    }
}

/// Jordan product `x o y`.
pub fn jordan_product(cone: Cone, x: &[f64], y: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonnegative(_) => {
            for i in 0..x.len() {
                out[i] = x[i] * y[i];
            }
        }
        Cone::SecondOrder(_) => {
            out[0] = dot(x, y);
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
        Cone::Psd(_) => {
            let (xm, ym) = (smat(x), smat(y));
            let p = &xm * &ym;
            let sym = (&p + p.transpose()) * 0.5;
            out.copy_from_slice(svec(&sym).as_slice());
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `x0^2 - ||x1||^2`, factored to limit cancellation near the boundary.
fn soc_residual(x: &[f64]) -> f64 {
    let n1 = norm(&x[1..]);
    (x[0] - n1) * (x[0] + n1)
}

/// Largest step `alpha` (possibly infinite) with `x + alpha * d` in the cone,
/// assuming `x` is interior.
pub fn max_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::Nonnegative(_) => x
            .iter()
            .zip(d)
            .filter(|(_, di)| **di < 0.0)
            .map(|(xi, di)| -xi / di)
            .fold(f64::INFINITY, f64::min),
        Cone::SecondOrder(_) => {
            let res = soc_residual(x);
            if res <= 0.0 {
                return 0.0;
            }
            let xn = res.sqrt();
            let xb0 = x[0] / xn;
            let xb1: Vec<f64> = x[1..].iter().map(|v| v / xn).collect();
            let xb_d = xb0 * d[0] - dot(&xb1, &d[1..]);
            let rho0 = xb_d / xn;
            let factor = (xb_d + d[0]) / (xb0 + 1.0);
            let rho1_norm = d[1..]
                .iter()
                .zip(&xb1)
                .map(|(di, bi)| {
                    let r = (di - factor * bi) / xn;
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            let sigma = rho1_norm - rho0;
            if sigma > 0.0 {
                1.0 / sigma
            } else {
                f64::INFINITY
            }
        }
        Cone::Psd(_) => {
            let xm = smat(x);
            let Some(chol) = xm.cholesky() else {
                return 0.0;
            };
            let l = chol.l();
            let dm = smat(d);
            // L^{-1} D L^{-T}
            let Some(linv) = l.clone().try_inverse() else {
                return 0.0;
            };
            let m = &linv * dm * linv.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let lmin = SymmetricEigen::new(m).eigenvalues.min();
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Nesterov-Todd scaling `W` of one cone block: the unique automorphism with
/// `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub enum Scaling {
    Nonnegative {
        w: Vec<f64>,
    },
    SecondOrder {
        eta: f64,
        wbar: Vec<f64>,
    },
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        lambda: Vec<f64>,
    },
}

impl Scaling {
    /// Returns `None` when `s` or `z` is not strictly interior.
    pub fn new(cone: Cone, s: &[f64], z: &[f64]) -> Option<Scaling> {
        match cone {
            Cone::Nonnegative(_) => {
                if s.iter().chain(z).any(|v| *v <= 0.0) {
                    return None;
                }
                Some(Scaling::Nonnegative {
                    w: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
                })
            }
            Cone::SecondOrder(_) => {
                let sres = soc_residual(s);
                let zres = soc_residual(z);
                if sres <= 0.0 || zres <= 0.0 || s[0] <= 0.0 || z[0] <= 0.0 {
                    return None;
                }
                let (sn, zn) = (sres.sqrt(), zres.sqrt());
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut wbar = vec![0.0; s.len()];
                wbar[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                for i in 1..s.len() {
                    wbar[i] = (sb[i] - zb[i]) / (2.0 * gamma);
                }
                Some(Scaling::SecondOrder {
                    eta: (sn / zn).sqrt(),
                    wbar,
                })
            }
            Cone::Psd(_) => {
                let ls = smat(s).cholesky()?.l();
                let lz = smat(z).cholesky()?.l();
                let svd = (lz.transpose() * &ls).svd(true, true);
                let u_t = svd.v_t?;
                let v = u_t.transpose();
                let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
                if lambda.iter().any(|l| *l <= 0.0 || !l.is_finite()) {
                    return None;
                }
                let n = lambda.len();
                let mut r = &ls * &v;
                let ls_inv = ls.try_inverse()?;
                let mut rinv = v.transpose() * ls_inv;
                for k in 0..n {
                    let sq = lambda[k].sqrt();
                    r.column_mut(k).scale_mut(1.0 / sq);
                    rinv.row_mut(k).scale_mut(sq);
                }
                Some(Scaling::Psd { r, rinv, lambda })
            }
        }
    }

    /// Applies `W`, `W^T`, `W^{-1}` or `W^{-T}` in place.
    pub fn apply(&self, op: Op, x: &mut [f64]) {
        match self {
            Scaling::Nonnegative { w } => {
                let inv = matches!(op, Op::Inv | Op::InvT);
                for (xi, wi) in x.iter_mut().zip(w) {
                    if inv {
                        *xi /= wi
                    } else {
                        *xi *= wi
                    }
                }
            }
            Scaling::SecondOrder { eta, wbar } => {
                // W = eta [[w0, w1'], [w1, I + w1 w1'/(1 + w0)]] is symmetric.
                let inv = matches!(op, Op::Inv | Op::InvT);
                let w0 = wbar[0];
                let w1 = &wbar[1..];
                let x0 = x[0];
                let w1x1 = dot(w1, &x[1..]);
                if inv {
                    x[0] = (w0 * x0 - w1x1) / eta;
                    let f = -x0 + w1x1 / (1.0 + w0);
                    for i in 1..x.len() {
                        x[i] = (x[i] + f * wbar[i]) / eta;
                    }
                } else {
                    x[0] = eta * (w0 * x0 + w1x1);
                    let f = x0 + w1x1 / (1.0 + w0);
                    for i in 1..x.len() {
                        x[i] = eta * (x[i] + f * wbar[i]);
                    }
                }
            }
            Scaling::Psd { r, rinv, .. } => {
                let m = smat(x);
                let out = match op {
                    Op::W => r.transpose() * m * r,
                    Op::WT => r * m * r.transpose(),
                    Op::Inv => rinv.transpose() * m * rinv,
                    Op::InvT => rinv * m * rinv.transpose(),
                };
                x.copy_from_slice(svec(&out).as_slice());
            }
        }
    }

    /// The scaled point `lambda = W z`.
    pub fn lambda(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Scaling::Psd { lambda, .. } => {
                let n = lambda.len();
                let mut out = vec![0.0; n * (n + 1) / 2];
                for (j, l) in lambda.iter().enumerate() {
                    out[svec_index(n, j, j)] = *l;
                }
                out
            }
            _ => {
                let mut out = z.to_vec();
                self.apply(Op::W, &mut out);
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    W,
    WT,
    Inv,
    InvT,
}

/// Solves `lambda o u = xi` for `u`, where `lambda` is the scaled point of
/// this block (diagonal for PSD blocks).
pub fn jordan_div(cone: Cone, lambda: &[f64], xi: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonnegative(_) => {
            for i in 0..xi.len() {
                out[i] = xi[i] / lambda[i];
            }
        }
        Cone::SecondOrder(_) => {
            let l0 = lambda[0];
            let det = l0 * l0 - dot(&lambda[1..], &lambda[1..]);
            let u0 = (l0 * xi[0] - dot(&lambda[1..], &xi[1..])) / det;
            out[0] = u0;
            for i in 1..xi.len() {
                out[i] = (xi[i] - u0 * lambda[i]) / l0;
            }
        }
        Cone::Psd(n) => {
            let mut k = 0;
            for j in 0..n {
                let lj = lambda[svec_index(n, j, j)];
                for i in j..n {
                    let li = lambda[svec_index(n, i, i)];
                    out[k] = 2.0 * xi[k] / (li + lj);
                    k += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc_point(seed: f64, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|i| ((i as f64 + 1.0) * seed).sin()).collect();
        v[0] = norm(&v[1..]) + 0.3 + seed.cos().abs();
        v
    }

    fn psd_point(seed: f64, n: usize) -> Vec<f64> {
        let m = DMatrix::from_fn(n, n, |i, j| ((i * n + j) as f64 * seed).cos());
        let p = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        svec(&p).as_slice().to_vec()
    }

    #[test]
    fn svec_layout_is_column_major_lower() {
        let n = 4;
        let mut k = 0;
        for j in 0..n {
            for i in j..n {
                assert_eq!(svec_index(n, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn svec_preserves_trace_inner_product() {
        let a = smat(&psd_point(0.7, 3));
        let b = smat(&psd_point(1.3, 3));
        let tr = (&a * &b).trace();
        assert!((svec(&a).dot(&svec(&b)) - tr).abs() < 1e-12);
    }

    fn check_scaling(cone: Cone, s: &[f64], z: &[f64]) {
        let sc = Scaling::new(cone, s, z).unwrap();
        let lam = sc.lambda(z);
        let mut wz = z.to_vec();
        sc.apply(Op::W, &mut wz);
        let mut ws = s.to_vec();
        sc.apply(Op::InvT, &mut ws);
        for i in 0..lam.len() {
            assert!((wz[i] - lam[i]).abs() < 1e-9, "W z != lambda");
            assert!((ws[i] - lam[i]).abs() < 1e-9, "W^-T s != lambda");
        }
        // W^{-1} W = I and W^T is the adjoint of W.
        let x: Vec<f64> = (0..s.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..s.len()).map(|i| (i as f64 * 1.1).cos()).collect();
        let mut t = x.clone();
        sc.apply(Op::W, &mut t);
        sc.apply(Op::Inv, &mut t);
        for i in 0..x.len() {
            assert!((t[i] - x[i]).abs() < 1e-9);
        }
        let mut wx = x.clone();
        sc.apply(Op::W, &mut wx);
        let mut wty = y.clone();
        sc.apply(Op::WT, &mut wty);
        assert!((dot(&wx, &y) - dot(&x, &wty)).abs() < 1e-9);
    }

    #[test]
    fn nt_scaling_maps_both_points_to_lambda() {
        check_scaling(Cone::Nonnegative(3), &[1.0, 2.0, 0.5], &[0.3, 4.0, 1.0]);
        check_scaling(Cone::SecondOrder(4), &soc_point(0.4, 4), &soc_point(1.7, 4));
        check_scaling(Cone::Psd(3), &psd_point(0.4, 3), &psd_point(2.1, 3));
    }

    #[test]
    fn jordan_div_inverts_product() {
        let cases = [
            (Cone::SecondOrder(4), soc_point(0.9, 4)),
            (Cone::Nonnegative(2), vec![2.0, 0.5]),
        ];
        for (cone, lam) in cases {
            let xi: Vec<f64> = (0..lam.len()).map(|i| i as f64 - 0.7).collect();
            let mut u = vec![0.0; lam.len()];
            jordan_div(cone, &lam, &xi, &mut u);
            let mut back = vec![0.0; lam.len()];
            jordan_product(cone, &lam, &u, &mut back);
            for i in 0..xi.len() {
                assert!((back[i] - xi[i]).abs() < 1e-12);
            }
        }
        // PSD with diagonal lambda
        let n = 3;
        let lam = svec(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.5])));
        let xi = psd_point(0.3, n);
        let mut u = vec![0.0; xi.len()];
        jordan_div(Cone::Psd(n), lam.as_slice(), &xi, &mut u);
        let mut back = vec![0.0; xi.len()];
        jordan_product(Cone::Psd(n), lam.as_slice(), &u, &mut back);
        for i in 0..xi.len() {
            assert!((back[i] - xi[i]).abs() < 1e-12);
        }
    }

    fn bisect_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
        let inside = |a: f64| {
            let p: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
            interior_shift(cone, &p) <= 0.0
        };
        let mut hi = 1.0;
        while inside(hi) {
            hi *= 2.0;
            if hi > 1e6 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn step_length_matches_bisection() {
        let x = soc_point(0.5, 5);
        let d: Vec<f64> = (0..5).map(|i| (i as f64 * 2.3).sin() - 0.8).collect();
        let a = max_step(Cone::SecondOrder(5), &x, &d);
        assert!((a - bisect_step(Cone::SecondOrder(5), &x, &d)).abs() < 1e-8 * a.max(1.0));

        let x = psd_point(0.6, 3);
        let d: Vec<f64> = psd_point(1.9, 3).iter().map(|v| -v).collect();
        let a = max_step(Cone::Psd(3), &x, &d);
        assert!((a - bisect_step(Cone::Psd(3), &x, &d)).abs() < 1e-8 * a.max(1.0));
    }
}
