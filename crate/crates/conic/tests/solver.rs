use mimo_conic::{solve, Cone, ConicProblem, SolverSettings, Status};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn dm(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

#[test]
fn epigraph_of_absolute_value() {
    // minimize t s.t. (t, 3) in Q^2
    let p = ConicProblem::new(
        dv(&[1.0]),
        dm(2, 1, &[-1.0, 0.0]),
        dv(&[0.0, 3.0]),
        vec![Cone::SecondOrder(2)],
    );
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_objective - 3.0).abs() < 1e-6);
}

#[test]
fn minimum_eigenvalue_by_lmi() {
    // maximize t s.t. diag(1,4) - t I psd  ->  t* = 1
    let p = ConicProblem::new(
        dv(&[-1.0]),
        // svec(t I) = (t, 0, t)
        dm(3, 1, &[1.0, 0.0, 1.0]),
        dv(&[1.0, 0.0, 4.0]),
        vec![Cone::Psd(2)],
    );
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((-sol.primal_objective - 1.0).abs() < 1e-6);
}

#[test]
fn unconstrained_distance_is_zero() {
    // minimize t s.t. ||x - c|| <= t, c = (1, 2); variables (x1, x2, t)
    let p = ConicProblem::new(
        dv(&[0.0, 0.0, 1.0]),
        dm(3, 3, &[0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0]),
        dv(&[0.0, -1.0, -2.0]),
        vec![Cone::SecondOrder(3)],
    );
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.primal_objective.abs() < 1e-6);
    assert!((sol.x[0] - 1.0).abs() < 1e-5 && (sol.x[1] - 2.0).abs() < 1e-5);
}

#[test]
fn equality_constrained_lp() {
    // minimize x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0  ->  (1, 0), value 1
    let p = ConicProblem::new(
        dv(&[1.0, 2.0]),
        dm(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
        dv(&[0.0, 0.0]),
        vec![Cone::Nonnegative(2)],
    )
    .with_equalities(dm(1, 2, &[1.0, 1.0]), dv(&[1.0]));
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_objective - 1.0).abs() < 1e-7);
    assert!((sol.y[0] + 1.0).abs() < 1e-6, "y = {}", sol.y);
}

#[test]
fn infeasible_lp_returns_certificate() {
    // x >= 1 and x <= 0
    let p = ConicProblem::new(
        dv(&[1.0]),
        dm(2, 1, &[-1.0, 1.0]),
        dv(&[-1.0, 0.0]),
        vec![Cone::Nonnegative(2)],
    );
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
    // G'z = 0, h'z = -1, z >= 0
    assert!((p.g.tr_mul(&sol.z)).norm() < 1e-6);
    assert!((p.h.dot(&sol.z) + 1.0).abs() < 1e-9);
    assert!(sol.z.iter().all(|v| *v >= -1e-12));
}

#[test]
fn infeasible_soc_returns_certificate() {
    // ||x|| <= 1 and x1 >= 2
    let p = ConicProblem::new(
        dv(&[0.0, 0.0]),
        dm(4, 2, &[0.0, 0.0, -1.0, 0.0, 0.0, -1.0, -1.0, 0.0]),
        dv(&[1.0, 0.0, 0.0, -2.0]),
        vec![Cone::SecondOrder(3), Cone::Nonnegative(1)],
    );
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
    assert!((p.g.tr_mul(&sol.z)).norm() < 1e-6);
}

#[test]
fn unbounded_lp_returns_ray() {
    // minimize x s.t. x <= 1
    let p = ConicProblem::new(dv(&[1.0]), dm(1, 1, &[1.0]), dv(&[1.0]), vec![Cone::Nonnegative(1)]);
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
    assert!((p.c.dot(&sol.x) + 1.0).abs() < 1e-9);
    assert!(sol.x[0] < 0.0);
}

#[test]
fn malformed_problem_is_rejected() {
    let p = ConicProblem::new(dv(&[1.0]), dm(1, 2, &[1.0, 1.0]), dv(&[1.0]), vec![Cone::Nonnegative(1)]);
    assert!(solve(&p, &SolverSettings::default()).is_err());
}

#[test]
fn psd_block_with_equalities() {
    // minimize tr(C X) s.t. tr(X) = 1, X psd  ->  lambda_min(C)
    let c = dm(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.5]);
    let lmin = c.clone().symmetric_eigen().eigenvalues.min();
    // variables: svec(X), s = svec(X) >= 0 in PSD cone
    let svec_c = mimo_conic::cones::svec(&c);
    let trace_row = mimo_conic::cones::svec(&DMatrix::identity(3, 3));
    let p = ConicProblem::new(svec_c, -DMatrix::identity(6, 6), DVector::zeros(6), vec![Cone::Psd(3)])
        .with_equalities(DMatrix::from_row_slice(1, 6, trace_row.as_slice()), dv(&[1.0]));
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal_objective - lmin).abs() < 1e-7);
}

/// Quadratic `0.5 x'Qx + q'x` over a Euclidean ball, as an SOCP.
struct BallQp {
    q_mat: DMatrix<f64>,
    q: DVector<f64>,
    center: DVector<f64>,
    radius: f64,
}

impl BallQp {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q_mat = &m * m.transpose() + DMatrix::identity(n, n) * 0.1;
        BallQp {
            q_mat,
            q: DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)),
            center: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            radius: rng.random_range(0.2..1.5),
        }
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q.dot(x)
    }

    /// Variables `(x, t)`; `0.5 x'Qx <= t` written as
    /// `|| (2 F x, 1 - t) || <= 1 + t` with `F'F = Q/2`.
    fn to_conic(&self) -> ConicProblem {
        let n = self.q.len();
        let f = (&self.q_mat * 0.5).cholesky().unwrap().l().transpose();
        let mut c = DVector::zeros(n + 1);
        c.rows_mut(0, n).copy_from(&self.q);
        c[n] = 1.0;
        let rows = (n + 2) + (n + 1);
        let mut g = DMatrix::zeros(rows, n + 1);
        let mut h = DVector::zeros(rows);
        // rotated epigraph cone
        h[0] = 1.0;
        g[(0, n)] = -1.0;
        g.view_mut((1, 0), (n, n)).copy_from(&(-&f * 2.0));
        h[n + 1] = 1.0;
        g[(n + 1, n)] = 1.0;
        // ball
        let o = n + 2;
        h[o] = self.radius;
        for i in 0..n {
            g[(o + 1 + i, i)] = -1.0;
            h[o + 1 + i] = -self.center[i];
        }
        ConicProblem::new(c, g, h, vec![Cone::SecondOrder(n + 2), Cone::SecondOrder(n + 1)])
    }

    fn projected_gradient(&self) -> DVector<f64> {
        let lmax = self.q_mat.clone().symmetric_eigen().eigenvalues.max();
        let step = 1.0 / lmax;
        let project = |x: DVector<f64>| {
            let d = &x - &self.center;
            let r = d.norm();
            if r <= self.radius {
                x
            } else {
                &self.center + d * (self.radius / r)
            }
        };
        let mut x = self.center.clone();
        let mut y = x.clone();
        let mut t = 1.0_f64;
        for _ in 0..200_000 {
            let grad = &self.q_mat * &y + &self.q;
            let next = project(&y - grad * step);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &x) * ((t - 1.0) / t_next);
            if (&next - &x).norm() < 1e-14 {
                return next;
            }
            x = next;
            t = t_next;
        }
        x
    }
}

#[test]
fn ball_qps_match_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.random_range(2..7);
        let qp = BallQp::random(&mut rng, n);
        let sol = solve(&qp.to_conic(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let x = sol.x.rows(0, n).into_owned();
        let oracle = qp.objective(&qp.projected_gradient());
        assert!((qp.objective(&x) - oracle).abs() <= 1e-6, "{} vs {}", qp.objective(&x), oracle);
    }
}

#[test]
fn box_constrained_lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(1..5);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let lo = DVector::from_fn(n, |_, _| rng.random_range(-2.0..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.1..2.0));
        let mut g = DMatrix::zeros(2 * n, n);
        let mut h = DVector::zeros(2 * n);
        for i in 0..n {
            g[(i, i)] = 1.0;
            h[i] = hi[i];
            g[(n + i, i)] = -1.0;
            h[n + i] = -lo[i];
        }
        let p = ConicProblem::new(c.clone(), g, h, vec![Cone::Nonnegative(2 * n)]);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let best: f64 = (0..n).map(|i| (c[i] * lo[i]).min(c[i] * hi[i])).sum();
        assert!((sol.primal_objective - best).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn weak_duality_and_determinism(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qp = BallQp::random(&mut rng, 4);
        let p = qp.to_conic();
        let s = SolverSettings::default();
        let a = solve(&p, &s).unwrap();
        let b = solve(&p, &s).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.status, Status::Optimal);
        prop_assert!(a.primal_objective >= a.dual_objective - 10.0 * s.tolerance);
        prop_assert!(a.residuals.primal <= s.tolerance);
        prop_assert!(a.residuals.dual <= s.tolerance);
        prop_assert!(a.residuals.gap <= s.tolerance);
    }

    #[test]
    fn objective_scaling_keeps_argmin(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qp = BallQp::random(&mut rng, 3);
        let p = qp.to_conic();
        let mut scaled = p.clone();
        scaled.c *= 1e3;
        let s = SolverSettings::default();
        let a = solve(&p, &s).unwrap();
        let b = solve(&scaled, &s).unwrap();
        prop_assert_eq!(b.status, Status::Optimal);
        let rel = (&a.x - &b.x).norm() / a.x.norm().max(1.0);
        prop_assert!(rel <= 1e-6, "relative argmin change {}", rel);
    }
}
