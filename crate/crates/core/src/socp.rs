//! Complex-valued second-order cone programs, lowered to the real conic
//! solver through the `(Re; Im)` embedding.
//!
//! The decision vector `x` is complex of length `n`; the objective is
//! `minimize ||F x||`, which has the same minimizers as `x^H F^H F x`.

use mimo_conic::{solve, Cone, ConicProblem, ConicSolution, ProblemError, SolverSettings, Status};
use nalgebra::{DMatrix, DVector};

use crate::linalg::{embed_matrix, unembed_vector, CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub enum ComplexConstraint {
    /// `Re(a^H x) >= b`.
    RealPartAtLeast { a: CVector, b: f64 },
    /// `Im(a^H x) = 0`.
    ImagPartZero { a: CVector },
    /// `||F x|| <= Re(a^H x) - b`.
    NormBound { f: CMatrix, a: CVector, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSocp {
    pub objective: CMatrix,
    pub constraints: Vec<ComplexConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSolution {
    pub status: Status,
    pub x: CVector,
    /// `||F x||` at the returned point.
    pub objective: f64,
    pub conic: ConicSolution,
}

/// Coefficients of `Re(a^H x)` and `Im(a^H x)` on `(Re x; Im x)`.
fn linear_rows(a: &CVector) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut re = vec![0.0; 2 * n];
    let mut im = vec![0.0; 2 * n];
    for i in 0..n {
        re[i] = a[i].re;
        re[n + i] = a[i].im;
        im[i] = -a[i].im;
        im[n + i] = a[i].re;
    }
    (re, im)
}

impl ComplexSocp {
    pub fn new(objective: CMatrix) -> Self {
        ComplexSocp {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn with(mut self, c: ComplexConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn num_complex_vars(&self) -> usize {
        self.objective.ncols()
    }

    /// Real problem over `(Re x; Im x; t)` with `t >= ||F x||`.
    pub fn to_conic(&self) -> ConicProblem {
        let n = self.num_complex_vars();
        let nv = 2 * n + 1;
        let mut g_rows: Vec<Vec<f64>> = Vec::new();
        let mut h = Vec::new();
        let mut cones = Vec::new();
        let mut eq_rows: Vec<Vec<f64>> = Vec::new();

        let push_embedded = |f: &CMatrix, g_rows: &mut Vec<Vec<f64>>, h: &mut Vec<f64>| {
            let fe = embed_matrix(f);
            for r in 0..fe.nrows() {
                let mut row = vec![0.0; nv];
                for c in 0..2 * n {
                    row[c] = -fe[(r, c)];
                }
                g_rows.push(row);
                h.push(0.0);
            }
            fe.nrows()
        };

        let mut row = vec![0.0; nv];
        row[2 * n] = -1.0;
        g_rows.push(row);
        h.push(0.0);
        let k = push_embedded(&self.objective, &mut g_rows, &mut h);
        cones.push(Cone::SecondOrder(1 + k));

        for con in &self.constraints {
            match con {
                ComplexConstraint::RealPartAtLeast { a, b } => {
                    let (re, _) = linear_rows(a);
                    let mut row: Vec<f64> = re.iter().map(|v| -v).collect();
                    row.push(0.0);
                    g_rows.push(row);
                    h.push(-b);
                    cones.push(Cone::Nonnegative(1));
                }
                ComplexConstraint::ImagPartZero { a } => {
                    let (_, mut im) = linear_rows(a);
                    im.push(0.0);
                    eq_rows.push(im);
                }
                ComplexConstraint::NormBound { f, a, b } => {
                    let (re, _) = linear_rows(a);
                    let mut row: Vec<f64> = re.iter().map(|v| -v).collect();
                    row.push(0.0);
                    g_rows.push(row);
                    h.push(-b);
                    let k = push_embedded(f, &mut g_rows, &mut h);
                    cones.push(Cone::SecondOrder(1 + k));
                }
            }
        }

        let mut c = DVector::zeros(nv);
        c[2 * n] = 1.0;
        let g = DMatrix::from_fn(g_rows.len(), nv, |i, j| g_rows[i][j]);
        let a = DMatrix::from_fn(eq_rows.len(), nv, |i, j| eq_rows[i][j]);
        ConicProblem::new(c, g, DVector::from_vec(h), cones).with_equalities(a, DVector::zeros(eq_rows.len()))
    }
}

pub fn solve_complex_socp(p: &ComplexSocp, settings: &SolverSettings) -> Result<ComplexSolution, ProblemError> {
    let n = p.num_complex_vars();
    let conic = solve(&p.to_conic(), settings)?;
    let x = unembed_vector(&conic.x.as_slice()[..2 * n]);
    let objective = (&p.objective * &x).norm();
    Ok(ComplexSolution {
        status: conic.status,
        x,
        objective,
        conic,
    })
}
