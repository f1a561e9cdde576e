//! Homogeneous self-dual embedding interior-point method with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector.
//!
//! The embedding works on the merged constraint `Ab x + s = bb` where the
//! first `p` rows are the equalities (slack pinned at zero) and the rest are
//! the cone rows. Iterates `(x, s, z, tau, kappa)` drive the residuals
//!
//! ```text
//! rx = Ab'z + c tau,   rz = Ab x + s - bb tau,   rt = c'x + bb'z + kappa
//! ```
//!
//! to zero while keeping `s o z = mu e`, `tau kappa = mu`. Either `tau`
//! stays bounded away from zero (optimal solution `x/tau`) or `kappa`
//! does, which certifies primal or dual infeasibility.

use nalgebra::DVector;

use crate::cones::{self, jordan_div, jordan_product, Op, Scaling};
use crate::kkt::{apply_blocks, Kkt};
use crate::problem::{ConicProblem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub static_regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-8,
            max_iterations: 200,
            static_regularization: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Primal infeasible; `y, z` hold a certificate with `b'y + h'z = -1`.
    Infeasible,
    /// Dual infeasible; `x` holds a ray with `c'x = -1`.
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    pub x: DVector<f64>,
    pub s: DVector<f64>,
    /// Multipliers of the equality constraints.
    pub y: DVector<f64>,
    /// Multipliers of the cone constraints.
    pub z: DVector<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 3;
const POLISH_STEPS: usize = 5;

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    s: DVector<f64>, // cone rows only
    z: DVector<f64>, // all rows: equality multipliers first
    tau: f64,
    kappa: f64,
}

/// Solves `problem`. The objective is normalized to unit norm before the
/// interior-point run and the multipliers are mapped back afterwards, so the
/// iterates do not depend on the scale of `c`.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution, ProblemError> {
    problem.validate()?;
    let k = problem.c.norm();
    if k == 0.0 || k == 1.0 {
        return Ok(Engine::new(problem, settings).run());
    }
    let mut normalized = problem.clone();
    normalized.c /= k;
    let mut sol = Engine::new(&normalized, settings).run();
    match sol.status {
        Status::Infeasible => {}
        Status::Unbounded => {
            sol.x /= k;
            sol.s /= k;
        }
        _ => {
            sol.y *= k;
            sol.z *= k;
            sol.primal_objective *= k;
            sol.dual_objective *= k;
        }
    }
    Ok(sol)
}

struct Engine<'a> {
    prob: &'a ConicProblem,
    settings: &'a SolverSettings,
    p: usize,
    m: usize,
    bb: DVector<f64>,
    degree: usize,
}

impl<'a> Engine<'a> {
    fn new(prob: &'a ConicProblem, settings: &'a SolverSettings) -> Self {
        let p = prob.num_equalities();
        let m = prob.cone_dim();
        let mut bb = DVector::zeros(p + m);
        bb.rows_mut(0, p).copy_from(&prob.b);
        bb.rows_mut(p, m).copy_from(&prob.h);
        let degree = prob.cones.iter().map(|c| c.degree()).sum();
        Engine {
            prob,
            settings,
            p,
            m,
            bb,
            degree,
        }
    }

    /// `Ab x` split into equality and cone parts.
    fn ab_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.p + self.m);
        out.rows_mut(0, self.p).copy_from(&(&self.prob.a * x));
        out.rows_mut(self.p, self.m).copy_from(&(&self.prob.g * x));
        out
    }

    fn ab_tr_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        self.prob.a.tr_mul(&z.rows(0, self.p).into_owned())
            + self.prob.g.tr_mul(&z.rows(self.p, self.m).into_owned())
    }

    fn s_full(&self, s: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.p + self.m);
        out.rows_mut(self.p, self.m).copy_from(s);
        out
    }

    fn block_ranges(&self) -> impl Iterator<Item = (crate::problem::Cone, std::ops::Range<usize>)> + '_ {
        let mut off = 0;
        self.prob.cones.iter().map(move |c| {
            let r = off..off + c.dim();
            off += c.dim();
            (*c, r)
        })
    }

    fn shift_into_cone(&self, v: &mut DVector<f64>) {
        let alpha = self
            .block_ranges()
            .map(|(c, r)| cones::interior_shift(c, &v.as_slice()[r]))
            .fold(f64::NEG_INFINITY, f64::max);
        if alpha >= -1e-8 {
            let mut e = vec![0.0; self.m];
            for (c, r) in self.block_ranges() {
                cones::identity(c, &mut e[r]);
            }
            for i in 0..self.m {
                v[i] += (1.0 + alpha.max(0.0)) * e[i];
            }
        }
    }

    fn initial_point(&self) -> Option<Iterate> {
        let n = self.prob.num_vars();
        let ident: Vec<Scaling> = self
            .prob
            .cones
            .iter()
            .map(|c| {
                let mut e = vec![0.0; c.dim()];
                cones::identity(*c, &mut e);
                Scaling::new(*c, &e, &e)
            })
            .collect::<Option<_>>()?;
        let kkt = Kkt::factor(
            &self.prob.a,
            &self.prob.g,
            &self.prob.cones,
            &ident,
            self.settings.static_regularization,
        )?;
        let zero_n = DVector::zeros(n);
        // min ||s|| s.t. Ax = b, Gx + s = h
        let (x, _, zc) = kkt.solve(&zero_n, &self.prob.b, &self.prob.h, REFINE_STEPS)?;
        let mut s = -zc;
        // min ||z|| s.t. A'y + G'z + c = 0
        let (_, y, zc) = kkt.solve(
            &(-&self.prob.c),
            &DVector::zeros(self.p),
            &DVector::zeros(self.m),
            REFINE_STEPS,
        )?;
        let mut zc = zc;
        self.shift_into_cone(&mut s);
        self.shift_into_cone(&mut zc);
        let mut z = DVector::zeros(self.p + self.m);
        z.rows_mut(0, self.p).copy_from(&y);
        z.rows_mut(self.p, self.m).copy_from(&zc);
        Some(Iterate {
            x,
            s,
            z,
            tau: 1.0,
            kappa: 1.0,
        })
    }

    fn run(&self) -> ConicSolution {
        let n = self.prob.num_vars();
        let tol = self.settings.tolerance;
        let Some(mut it) = self.initial_point() else {
            return self.failure(
                Iterate {
                    x: DVector::zeros(n),
                    s: DVector::zeros(self.m),
                    z: DVector::zeros(self.p + self.m),
                    tau: 1.0,
                    kappa: 0.0,
                },
                0,
            );
        };
        let cnorm = self.prob.c.norm().max(1.0);
        let bnorm = self.bb.norm().max(1.0);

        let mut best: Option<Best> = None;
        let mut polished = 0;
        for iter in 0..=self.settings.max_iterations {
            let ax = self.ab_mul(&it.x);
            let atz = self.ab_tr_mul(&it.z);
            let sfull = self.s_full(&it.s);
            let rx = &atz + &self.prob.c * it.tau;
            let rz = &ax + &sfull - &self.bb * it.tau;
            let cx = self.prob.c.dot(&it.x);
            let bz = self.bb.dot(&it.z);
            let rt = cx + bz + it.kappa;

            let zc = it.z.rows(self.p, self.m).into_owned();
            let sz = it.s.dot(&zc);

            // Termination tests on the de-homogenized point.
            let res = Residuals {
                primal: rz.norm() / it.tau / bnorm,
                dual: rx.norm() / it.tau / cnorm,
                gap: {
                    let (pc, dc) = (cx / it.tau, -bz / it.tau);
                    let g = (sz / (it.tau * it.tau)).min((pc - dc).abs());
                    g / pc.abs().min(dc.abs()).max(1.0)
                },
            };
            let merit = res.primal.max(res.dual).max(res.gap);
            let converged = merit <= tol;
            // Once converged, a few extra iterations usually buy several
            // more digits; keep whichever iterate is best.
            if let Some(b) = best.take() {
                if !(converged && merit < 0.5 * b.merit) {
                    return self.finish(b.it, Status::Optimal, b.iter, b.res);
                }
                polished += 1;
                if polished > POLISH_STEPS {
                    return self.finish(it, Status::Optimal, iter, res);
                }
                best = Some(Best { it: it.clone(), iter, res, merit });
            } else if converged {
                best = Some(Best { it: it.clone(), iter, res, merit });
            }
            if bz < 0.0 && atz.norm() / (-bz) <= tol {
                return self.finish(it, Status::Infeasible, iter, res);
            }
            if cx < 0.0 && (&ax + &sfull).norm() / (-cx) <= tol {
                return self.finish(it, Status::Unbounded, iter, res);
            }
            if iter == self.settings.max_iterations {
                if let Some(b) = best {
                    return self.finish(b.it, Status::Optimal, b.iter, b.res);
                }
                return self.finish(it, Status::MaxIter, iter, res);
            }

            let step = self.step(&it, &rx, &rz, rt, sz).filter(Step::is_finite);
            match (step, best.take()) {
                (Some(step), b) => {
                    best = b;
                    it = step.apply(it);
                }
                (None, Some(b)) => return self.finish(b.it, Status::Optimal, b.iter, b.res),
                (None, None) => return self.finish(it, Status::NumericalFailure, iter, res),
            }
        }
        unreachable!()
    }

    fn step(
        &self,
        it: &Iterate,
        rx: &DVector<f64>,
        rz: &DVector<f64>,
        rt: f64,
        sz: f64,
    ) -> Option<Step> {
        let zc = it.z.rows(self.p, self.m).into_owned();
        let scalings: Vec<Scaling> = self
            .block_ranges()
            .map(|(c, r)| Scaling::new(c, &it.s.as_slice()[r.clone()], &zc.as_slice()[r]))
            .collect::<Option<_>>()?;
        let mut lambda = vec![0.0; self.m];
        for ((c, r), sc) in self.block_ranges().zip(&scalings) {
            let _ = c;
            lambda[r.clone()].copy_from_slice(&sc.lambda(&zc.as_slice()[r]));
        }
        let mu = (sz + it.tau * it.kappa) / (self.degree as f64 + 1.0);

        let kkt = Kkt::factor(
            &self.prob.a,
            &self.prob.g,
            &self.prob.cones,
            &scalings,
            self.settings.static_regularization,
        )?;
        let p = self.p;
        let (x1, y1, z1) = kkt.solve(
            &(-&self.prob.c),
            &self.prob.b,
            &self.prob.h,
            REFINE_STEPS,
        )?;
        let mut zall1 = DVector::zeros(p + self.m);
        zall1.rows_mut(0, p).copy_from(&y1);
        zall1.rows_mut(p, self.m).copy_from(&z1);

        let lam_sq = self.jordan(&lambda, &lambda);

        // Predictor: sigma = 0.
        let xi_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = self.direction(
            it, &kkt, &scalings, &lambda, &x1, &zall1, rx, rz, rt, &xi_aff,
            -it.tau * it.kappa, 0.0,
        )?;
        let alpha_aff = self.max_step(it, &aff);
        let sigma = (1.0 - alpha_aff.min(1.0)).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let mut ds_scaled = aff.ds.as_slice().to_vec();
        apply_blocks(&self.prob.cones, &scalings, Op::InvT, &mut ds_scaled);
        let mut dz_scaled = aff.dz.rows(p, self.m).into_owned().as_slice().to_vec();
        apply_blocks(&self.prob.cones, &scalings, Op::W, &mut dz_scaled);
        let cross = self.jordan(&ds_scaled, &dz_scaled);
        let mut e = vec![0.0; self.m];
        for (c, r) in self.block_ranges() {
            cones::identity(c, &mut e[r]);
        }
        let xi: Vec<f64> = (0..self.m)
            .map(|i| -lam_sq[i] + sigma * mu * e[i] - cross[i])
            .collect();
        let dk = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
        let dir = self.direction(
            it, &kkt, &scalings, &lambda, &x1, &zall1, rx, rz, rt, &xi, dk, sigma,
        )?;
        let alpha = (STEP_FRACTION * self.max_step(it, &dir)).min(1.0);
        if alpha < 1e-13 {
            return None;
        }
        Some(Step { dir, alpha })
    }

    fn jordan(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (c, r) in self.block_ranges() {
            jordan_product(c, &a[r.clone()], &b[r.clone()], &mut out[r]);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        kkt: &Kkt,
        scalings: &[Scaling],
        lambda: &[f64],
        x1: &DVector<f64>,
        zall1: &DVector<f64>,
        rx: &DVector<f64>,
        rz: &DVector<f64>,
        rt: f64,
        xi: &[f64],
        dk: f64,
        sigma: f64,
    ) -> Option<Direction> {
        let p = self.p;
        let f = 1.0 - sigma;
        // Scaled complementarity target  W^{-T} ds + W dz = lambda \ xi.
        let mut target = vec![0.0; self.m];
        for (c, r) in self.block_ranges() {
            jordan_div(c, &lambda[r.clone()], &xi[r.clone()], &mut target[r]);
        }
        let mut wt_target = target.clone();
        apply_blocks(&self.prob.cones, scalings, Op::WT, &mut wt_target);

        let dx_rhs = -rx * f;
        let dz_rhs = -rz * f;
        let r2 = dz_rhs.rows(0, p).into_owned();
        let r3 = dz_rhs.rows(p, self.m).into_owned() - DVector::from_vec(wt_target);
        let (x2, y2, z2) = kkt.solve(&dx_rhs, &r2, &r3, REFINE_STEPS)?;
        let mut zall2 = DVector::zeros(p + self.m);
        zall2.rows_mut(0, p).copy_from(&y2);
        zall2.rows_mut(p, self.m).copy_from(&z2);

        let dt_rhs = -rt * f;
        let num = dt_rhs - dk / it.tau - self.prob.c.dot(&x2) - self.bb.dot(&zall2);
        let den = self.prob.c.dot(x1) + self.bb.dot(zall1) - it.kappa / it.tau;
        let dtau = num / den;
        let dx = x2 + x1 * dtau;
        let dz = zall2 + zall1 * dtau;
        let dkappa = (dk - it.kappa * dtau) / it.tau;

        // ds from the linearized primal equation G dx + ds - h dtau = -(1 - sigma) rz.
        // Equal to W^T (target - W dz) in exact arithmetic, but it keeps the
        // primal residual consistent when W is badly conditioned.
        let ds = dz_rhs.rows(p, self.m) - &self.prob.g * &dx + &self.prob.h * dtau;

        Some(Direction {
            dx,
            ds,
            dz,
            dtau,
            dkappa,
        })
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let p = self.p;
        let mut alpha = f64::INFINITY;
        for (c, r) in self.block_ranges() {
            alpha = alpha.min(cones::max_step(c, &it.s.as_slice()[r.clone()], &d.ds.as_slice()[r.clone()]));
            let zr = p + r.start..p + r.end;
            alpha = alpha.min(cones::max_step(c, &it.z.as_slice()[zr.clone()], &d.dz.as_slice()[zr]));
        }
        if d.dtau < 0.0 {
            alpha = alpha.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / d.dkappa);
        }
        alpha
    }

    fn finish(&self, it: Iterate, status: Status, iterations: usize, residuals: Residuals) -> ConicSolution {
        let p = self.p;
        let (x, s, z) = match status {
            Status::Infeasible => {
                let scale = -self.bb.dot(&it.z);
                (DVector::zeros(it.x.len()), DVector::zeros(self.m), it.z / scale)
            }
            Status::Unbounded => {
                let scale = -self.prob.c.dot(&it.x);
                (it.x / scale, it.s / scale, DVector::zeros(p + self.m))
            }
            _ => (it.x / it.tau, it.s / it.tau, it.z / it.tau),
        };
        let (primal_objective, dual_objective) = match status {
            Status::Infeasible => (f64::INFINITY, f64::INFINITY),
            Status::Unbounded => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            _ => (self.prob.c.dot(&x), -self.bb.dot(&z)),
        };
        ConicSolution {
            status,
            y: z.rows(0, p).into_owned(),
            z: z.rows(p, self.m).into_owned(),
            x,
            s,
            primal_objective,
            dual_objective,
            iterations,
            residuals,
        }
    }

    fn failure(&self, it: Iterate, iterations: usize) -> ConicSolution {
        self.finish(it, Status::NumericalFailure, iterations, Residuals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        })
    }
}

struct Best {
    it: Iterate,
    iter: usize,
    res: Residuals,
    merit: f64,
}

struct Direction {
    dx: DVector<f64>,
    ds: DVector<f64>,
    dz: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Step {
    dir: Direction,
    alpha: f64,
}

impl Step {
    fn is_finite(&self) -> bool {
        let d = &self.dir;
        d.dtau.is_finite()
            && d.dkappa.is_finite()
            && d.dx.iter().chain(d.ds.iter()).chain(d.dz.iter()).all(|v| v.is_finite())
    }

    fn apply(self, mut it: Iterate) -> Iterate {
        let a = self.alpha;
        it.x.axpy(a, &self.dir.dx, 1.0);
        it.s.axpy(a, &self.dir.ds, 1.0);
        it.z.axpy(a, &self.dir.dz, 1.0);
        it.tau += a * self.dir.dtau;
        it.kappa += a * self.dir.dkappa;
        it
    }
}
