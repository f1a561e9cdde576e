//! Dense primal-dual interior-point solver for small conic programs over
//! products of nonnegative orthants, second-order cones and PSD cones.
//!
//! Problem sizes of interest are tens to a few hundred variables, so every
//! linear system is solved densely.

pub mod cbf;
pub mod cones;
mod kkt;
pub mod problem;
pub mod solver;

pub use problem::{Cone, ConicProblem, ProblemError};
pub use solver::{solve, ConicSolution, Residuals, SolverSettings, Status};
