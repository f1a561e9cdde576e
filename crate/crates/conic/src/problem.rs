use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// One block of the cone product that the slack vector `s` lives in.
///
/// PSD blocks are stored in `svec` form: the lower triangle of the matrix,
/// column by column, with off-diagonal entries scaled by `sqrt(2)` so that
/// the Euclidean inner product of two `svec`s equals the trace inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Nonnegative(usize),
    /// `(t, x)` with `t >= ||x||`; the dimension counts `t`.
    SecondOrder(usize),
    /// `n x n` symmetric positive semidefinite matrices.
    Psd(usize),
}

impl Cone {
    /// Length of this block inside the slack vector.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonnegative(n) | Cone::SecondOrder(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Barrier degree, i.e. the rank of the identity element.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonnegative(n) => n,
            Cone::SecondOrder(_) => 1,
            Cone::Psd(n) => n,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("second-order cone block must have dimension >= 1")]
    EmptySecondOrder,
    #[error("problem data contains a non-finite value")]
    NonFinite,
}

/// A linear-objective conic program
///
/// ```text
/// minimize    c'x
/// subject to  A x = b
///             G x + s = h,   s in K = K_1 x ... x K_m
/// ```
///
/// with `x` free. Its dual is `maximize -b'y - h'z` subject to
/// `A'y + G'z + c = 0`, `z in K` (all cones used here are self-dual).
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    /// Problem with no equality constraints.
    pub fn new(c: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>, cones: Vec<Cone>) -> Self {
        let n = c.len();
        ConicProblem {
            c,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            g,
            h,
            cones,
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.b.len()
    }

    pub fn cone_dim(&self) -> usize {
        self.cones.iter().map(Cone::dim).sum()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.num_vars();
        let check = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(ProblemError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("equality matrix columns", n, self.a.ncols())?;
        check("equality matrix rows", self.b.len(), self.a.nrows())?;
        check("cone matrix columns", n, self.g.ncols())?;
        check("cone matrix rows", self.h.len(), self.g.nrows())?;
        check("cone dimensions", self.h.len(), self.cone_dim())?;
        if self
            .cones
            .iter()
            .any(|c| matches!(c, Cone::SecondOrder(0)))
        {
            return Err(ProblemError::EmptySecondOrder);
        }
        let finite = self.c.iter().all(|v| v.is_finite())
            && self.a.iter().all(|v| v.is_finite())
            && self.b.iter().all(|v| v.is_finite())
            && self.g.iter().all(|v| v.is_finite())
            && self.h.iter().all(|v| v.is_finite());
        if !finite {
            return Err(ProblemError::NonFinite);
        }
        Ok(())
    }
}
