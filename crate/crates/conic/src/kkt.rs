//! Linear algebra for the Newton systems
//!
//! ```text
//! [ 0   A0'  Ac' ] [dx ]   [r1]
//! [ A0  0    0   ] [dy ] = [r2]
//! [ Ac  0   -H   ] [dzc]   [r3]
//! ```
//!
//! where `H = W'W` is block diagonal over the cones. The cone rows are
//! eliminated (`dzc = H^{-1}(Ac dx - r3)`), leaving a small dense system in
//! `(dx, dy)` that is LU-factored once per iteration and reused for every
//! right-hand side. Static regularization is removed by iterative refinement
//! against the unregularized system.

use nalgebra::{DMatrix, DVector, LU};

use crate::cones::{Op, Scaling};
use crate::problem::Cone;

pub(crate) struct Kkt<'a> {
    a0: &'a DMatrix<f64>,
    ac: &'a DMatrix<f64>,
    cones: &'a [Cone],
    scalings: &'a [Scaling],
    /// `W^{-T} Ac`, block by block.
    scaled: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

pub(crate) fn apply_blocks(cones: &[Cone], scalings: &[Scaling], op: Op, v: &mut [f64]) {
    let mut off = 0;
    for (cone, sc) in cones.iter().zip(scalings) {
        let d = cone.dim();
        sc.apply(op, &mut v[off..off + d]);
        off += d;
    }
}

impl<'a> Kkt<'a> {
    pub fn factor(
        a0: &'a DMatrix<f64>,
        ac: &'a DMatrix<f64>,
        cones: &'a [Cone],
        scalings: &'a [Scaling],
        reg: f64,
    ) -> Option<Self> {
        let n = ac.ncols();
        let p = a0.nrows();
        let mut scaled = ac.clone();
        let mut col = vec![0.0; ac.nrows()];
        for j in 0..n {
            col.copy_from_slice(scaled.column(j).as_slice());
            apply_blocks(cones, scalings, Op::InvT, &mut col);
            scaled.column_mut(j).copy_from_slice(&col);
        }
        let normal = scaled.tr_mul(&scaled);
        let mut m = DMatrix::zeros(n + p, n + p);
        m.view_mut((0, 0), (n, n)).copy_from(&normal);
        m.view_mut((0, n), (n, p)).copy_from(&a0.transpose());
        m.view_mut((n, 0), (p, n)).copy_from(a0);
        for i in 0..n {
            m[(i, i)] += reg;
        }
        for i in n..n + p {
            m[(i, i)] -= reg;
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt {
            a0,
            ac,
            cones,
            scalings,
            scaled,
            lu,
        })
    }

    fn solve_reduced(&self, r1: &DVector<f64>, r2: &DVector<f64>, r3: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let n = r1.len();
        let p = r2.len();
        let mut w3 = r3.clone();
        apply_blocks(self.cones, self.scalings, Op::InvT, w3.as_mut_slice());
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n)
            .copy_from(&(r1 + self.scaled.tr_mul(&w3)));
        rhs.rows_mut(n, p).copy_from(r2);
        let sol = self.lu.solve(&rhs)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let mut dz = &self.scaled * &dx - w3;
        apply_blocks(self.cones, self.scalings, Op::Inv, dz.as_mut_slice());
        Some((dx, dy, dz))
    }

    /// Multiplies the unregularized KKT matrix into `(dx, dy, dz)`.
    fn multiply(
        &self,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
        dz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let r1 = self.a0.tr_mul(dy) + self.ac.tr_mul(dz);
        let r2 = self.a0 * dx;
        let mut hz = dz.clone();
        apply_blocks(self.cones, self.scalings, Op::W, hz.as_mut_slice());
        apply_blocks(self.cones, self.scalings, Op::WT, hz.as_mut_slice());
        let r3 = self.ac * dx - hz;
        (r1, r2, r3)
    }

    pub fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
        refine_steps: usize,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.solve_reduced(r1, r2, r3)?;
        let scale = 1.0 + inf_norm(r1).max(inf_norm(r2)).max(inf_norm(r3));
        for _ in 0..refine_steps {
            let (e1, e2, e3) = self.multiply(&dx, &dy, &dz);
            let (e1, e2, e3) = (r1 - e1, r2 - e2, r3 - e3);
            let err = inf_norm(&e1).max(inf_norm(&e2)).max(inf_norm(&e3));
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_reduced(&e1, &e2, &e3)?;
            dx += cx;
            dy += cy;
            dz += cz;
        }
        if dx.iter().chain(dy.iter()).chain(dz.iter()).all(|v| v.is_finite()) {
            Some((dx, dy, dz))
        } else {
            None
        }
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
