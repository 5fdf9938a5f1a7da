//! The strongly convex subproblem that defines the flow direction:
//!
//! ```text
//! min_ξ  ½‖ξ + g₀‖²   s.t.  aⱼ + gⱼᵀξ + (β/2)‖ξ‖² ≤ 0,  j = 1..m
//! ```
//!
//! Solved on the dual. For fixed multipliers `u ≥ 0` the Lagrangian minimizer
//! has the closed form `ξ(u) = −(g₀ + Σ uⱼ gⱼ)/(1 + β Σ uⱼ)`, the dual gradient
//! is the vector of constraint values at `ξ(u)`, and the dual Hessian is the
//! negative Gram matrix `−MᵀM/(1 + βΣu)` with columns `mⱼ = gⱼ + βξ(u)`.
//! The dual has one coordinate per constraint, so a projected Newton-scaled
//! ascent with backtracking converges in a handful of iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimateBundle;
use crate::linalg::{axpy, dot, norm, norm_sq};

/// Curvature weight β(θ) of the robust constraint term. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Beta {
    Constant(f64),
    /// `base + slope·‖θ‖²`
    Affine {
        base: f64,
        slope: f64,
    },
}

impl Default for Beta {
    fn default() -> Self {
        Beta::Constant(1.0)
    }
}

impl Beta {
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match *self {
            Beta::Constant(b) => b,
            Beta::Affine { base, slope } => base + slope * norm_sq(theta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Beta::Constant(b) => b > 0.0 && b.is_finite(),
            Beta::Affine { base, slope } => base > 0.0 && slope >= 0.0 && base.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "beta must be strictly positive (beta = 0 is the non-robust flow)".into(),
            ))
        }
    }
}

/// One constraint `level + gradientᵀξ + (β/2)‖ξ‖² ≤ 0`; `level` is `α·Vⱼ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub level: f64,
    pub gradient: Vec<f64>,
}

impl Constraint {
    pub fn new(level: f64, gradient: Vec<f64>) -> Self {
        Self { level, gradient }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpProblem {
    g0: Vec<f64>,
    constraints: Vec<Constraint>,
    beta: f64,
}

impl QcqpProblem {
    pub fn new(g0: Vec<f64>, constraints: Vec<Constraint>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be strictly positive, got {beta}"
            )));
        }
        let dim = g0.len();
        for c in &constraints {
            if c.gradient.len() != dim {
                return Err(Error::Dimension {
                    what: "constraint gradient",
                    expected: dim,
                    got: c.gradient.len(),
                });
            }
        }
        if !crate::linalg::all_finite(&g0)
            || constraints
                .iter()
                .any(|c| !c.level.is_finite() || !crate::linalg::all_finite(&c.gradient))
        {
            return Err(Error::NonFinite("subproblem data".into()));
        }
        Ok(Self {
            g0,
            constraints,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.g0.len()
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `aⱼ + gⱼᵀξ + (β/2)‖ξ‖²` for every constraint.
    pub fn constraint_values(&self, xi: &[f64]) -> Vec<f64> {
        let q = 0.5 * self.beta * norm_sq(xi);
        self.constraints
            .iter()
            .map(|c| c.level + dot(&c.gradient, xi) + q)
            .collect()
    }

    pub fn objective(&self, xi: &[f64]) -> f64 {
        0.5 * xi
            .iter()
            .zip(&self.g0)
            .map(|(x, g)| (x + g) * (x + g))
            .sum::<f64>()
    }

    /// Magnitude of the data, used to make tolerances scale-aware.
    pub fn data_scale(&self) -> f64 {
        let g = self
            .constraints
            .iter()
            .map(|c| norm(&c.gradient).max(c.level.abs()))
            .fold(0.0f64, f64::max);
        1.0 + norm(&self.g0).max(g)
    }

    fn dual_value(&self, u: &[f64], xi: &[f64]) -> f64 {
        // D(u) = ½‖g₀‖² + uᵀa − ½(1 + βΣu)‖ξ(u)‖²
        let s: f64 = u.iter().sum();
        let w = 1.0 + self.beta * s;
        0.5 * norm_sq(&self.g0)
            + self
                .constraints
                .iter()
                .zip(u)
                .map(|(c, ui)| ui * c.level)
                .sum::<f64>()
            - 0.5 * w * norm_sq(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIterations => "max_iterations",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpSolution {
    /// Direction ξ. Meaningless when `status` is `Infeasible`.
    pub xi: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub active_set: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stopping tolerance on the KKT residual, relative to [`QcqpProblem::data_scale`].
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

/// Dual iterates beyond this norm signal an unbounded dual.
const DIVERGENCE_NORM: f64 = 1e12;

/// `ξ = −(g₀ + Σ uⱼ gⱼ)/(1 + β Σ uⱼ)`.
pub fn closed_form_direction(
    g0: &[f64],
    gradients: &[&[f64]],
    multipliers: &[f64],
    beta: f64,
) -> Vec<f64> {
    let mut num = g0.to_vec();
    let mut s = 0.0;
    for (g, &u) in gradients.iter().zip(multipliers) {
        axpy(u, g, &mut num);
        s += u;
    }
    let w = 1.0 + beta * s;
    num.iter().map(|v| -v / w).collect()
}

fn direction_for(problem: &QcqpProblem, u: &[f64]) -> Vec<f64> {
    let grads: Vec<&[f64]> = problem
        .constraints
        .iter()
        .map(|c| c.gradient.as_slice())
        .collect();
    closed_form_direction(&problem.g0, &grads, u, problem.beta)
}

fn residual_parts(problem: &QcqpProblem, xi: &[f64], u: &[f64]) -> f64 {
    let beta = problem.beta;
    let mut stat: Vec<f64> = xi.iter().zip(&problem.g0).map(|(x, g)| x + g).collect();
    for (c, &uj) in problem.constraints.iter().zip(u) {
        axpy(uj, &c.gradient, &mut stat);
        axpy(uj * beta, xi, &mut stat);
    }
    let mut r = norm(&stat);
    for (cv, &uj) in problem.constraint_values(xi).iter().zip(u) {
        r = r.max(cv.max(0.0)).max((-uj).max(0.0)).max((uj * cv).abs());
    }
    r
}

/// Single scalar certifying the KKT system: the maximum of the stationarity
/// norm, primal violation, dual negativity and complementarity.
pub fn kkt_residual(problem: &QcqpProblem, solution: &QcqpSolution) -> f64 {
    residual_parts(problem, &solution.xi, &solution.multipliers)
}

/// Solves the subproblem with the default options.
pub fn solve_default(problem: &QcqpProblem) -> QcqpSolution {
    solve(problem, SolverOptions::default())
}

pub fn solve(problem: &QcqpProblem, opts: SolverOptions) -> QcqpSolution {
    let m = problem.constraints.len();
    let beta = problem.beta;
    let tol = opts.tol * problem.data_scale();
    let mut u = vec![0.0; m];
    let mut xi = direction_for(problem, &u);
    let mut iterations = 0;
    let mut diverged = false;

    if m > 0 {
        let mut res = residual_parts(problem, &xi, &u);
        while iterations < opts.max_iters && res > tol {
            iterations += 1;
            let c = problem.constraint_values(&xi);
            let s: f64 = u.iter().sum();
            let w = 1.0 + beta * s;

            // Coordinates pinned at the bound: u = 0 with the gradient pointing outward.
            let eps = 1e-12;
            let free: Vec<usize> = (0..m).filter(|&j| u[j] > eps || c[j] > 0.0).collect();

            let mut dir = vec![0.0; m];
            dir.copy_from_slice(&c[..m]);
            if !free.is_empty() {
                let cols: Vec<Vec<f64>> = free
                    .iter()
                    .map(|&j| {
                        let mut mj = problem.constraints[j].gradient.clone();
                        axpy(beta, &xi, &mut mj);
                        mj
                    })
                    .collect();
                let k = free.len();
                let mut h = DMatrix::from_fn(k, k, |r, q| dot(&cols[r], &cols[q]) / w);
                let diag_scale = (0..k).map(|r| h[(r, r)]).fold(0.0f64, f64::max);
                let reg = 1e-13 * (1.0 + diag_scale);
                for r in 0..k {
                    h[(r, r)] += reg;
                }
                let rhs = DVector::from_iterator(k, free.iter().map(|&j| c[j]));
                if let Some(chol) = h.cholesky() {
                    let d = chol.solve(&rhs);
                    for (r, &j) in free.iter().enumerate() {
                        dir[j] = d[r];
                    }
                }
            }

            let d0 = problem.dual_value(&u, &xi);
            let mut accepted = false;
            for attempt in 0..2 {
                // Second attempt falls back to the plain gradient direction.
                let d = if attempt == 0 { dir.clone() } else { c.clone() };
                let mut t = 1.0;
                for _ in 0..60 {
                    let cand: Vec<f64> = u
                        .iter()
                        .zip(&d)
                        .map(|(ui, di)| (ui + t * di).max(0.0))
                        .collect();
                    let xi_c = direction_for(problem, &cand);
                    let d1 = problem.dual_value(&cand, &xi_c);
                    let step: Vec<f64> = cand.iter().zip(&u).map(|(a, b)| a - b).collect();
                    let lin = dot(&c, &step);
                    let res_c = residual_parts(problem, &xi_c, &cand);
                    // The dual may not decrease beyond rounding, so the
                    // iteration cannot cycle.
                    let ascent = d1.is_finite() && d1 >= d0 - 1e-12 * (1.0 + d0.abs());
                    if (ascent && d1 >= d0 + 1e-4 * lin && lin > 0.0)
                        || (ascent && res_c < 0.5 * res)
                    {
                        u = cand;
                        xi = xi_c;
                        res = res_c;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if accepted {
                    break;
                }
            }
            if !accepted {
                break;
            }
            if u.iter().fold(0.0f64, |a, v| a.max(*v)) > DIVERGENCE_NORM {
                diverged = true;
                break;
            }
        }
    }

    let residual = residual_parts(problem, &xi, &u);
    let status = if residual <= tol {
        SolveStatus::Optimal
    } else {
        // Infeasibility is declared only when the iterate is infeasible, the
        // dual ran away or stalled, and no strictly feasible point exists.
        let violated = problem.constraint_values(&xi).iter().any(|v| *v > tol);
        let stalled = iterations < opts.max_iters;
        if violated && (diverged || stalled) && !slater_probe(problem).strictly_feasible {
            SolveStatus::Infeasible
        } else {
            SolveStatus::MaxIterations
        }
    };
    let active_tol = 10.0 * tol;
    let cv = problem.constraint_values(&xi);
    let active_set = (0..m)
        .filter(|&j| u[j] > 0.0 || cv[j].abs() <= active_tol)
        .collect();
    QcqpSolution {
        xi,
        multipliers: u,
        status,
        kkt_residual: residual,
        active_set,
        iterations,
    }
}

/// Outcome of the strict-feasibility probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterProbe {
    pub strictly_feasible: bool,
    pub witness: Option<Vec<f64>>,
    /// Minimum-norm solution of the linearized constraints, when they are feasible.
    pub linearized: Option<Vec<f64>>,
}

/// Looks for a strictly feasible point.
///
/// Solves `min ‖ξ‖² s.t. aⱼ + gⱼᵀξ ≤ 0` and then searches the ray `t·ξ*`
/// (the quadratic terms scale as `t²`, the linear ones as `t`). Returns the
/// best point on the ray if every constraint is strictly negative there.
pub fn slater_probe(problem: &QcqpProblem) -> SlaterProbe {
    let m = problem.constraints.len();
    let dim = problem.dim();
    if m == 0 {
        return SlaterProbe {
            strictly_feasible: true,
            witness: Some(vec![0.0; dim]),
            linearized: Some(vec![0.0; dim]),
        };
    }
    // Dual of the min-norm problem: min_{λ≥0} ½λᵀGᵀGλ − aᵀλ, ξ = −Gλ.
    let gram = DMatrix::from_fn(m, m, |r, s| {
        dot(
            &problem.constraints[r].gradient,
            &problem.constraints[s].gradient,
        )
    });
    let levels: Vec<f64> = problem.constraints.iter().map(|c| c.level).collect();
    let scale = problem.data_scale();
    let lin_tol = 1e-9 * scale;
    let Some(lambda) = crate::linalg::nonneg_qp_small(&gram, &levels, 1e-10) else {
        return SlaterProbe {
            strictly_feasible: false,
            witness: None,
            linearized: None,
        };
    };
    let mut xi_star = vec![0.0; dim];
    for (c, l) in problem.constraints.iter().zip(&lambda) {
        axpy(-l, &c.gradient, &mut xi_star);
    }
    let lin_ok = problem
        .constraints
        .iter()
        .all(|c| c.level + dot(&c.gradient, &xi_star) <= lin_tol);
    if !lin_ok {
        return SlaterProbe {
            strictly_feasible: false,
            witness: None,
            linearized: None,
        };
    }

    let beta = problem.beta;
    let nsq = norm_sq(&xi_star);
    let worst = |t: f64| -> f64 {
        problem
            .constraints
            .iter()
            .map(|c| c.level + t * dot(&c.gradient, &xi_star) + 0.5 * beta * t * t * nsq)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut candidates: Vec<f64> = (-30..=30).map(|k| 2f64.powi(k)).collect();
    candidates.push(0.0);
    // Minimizers of each scalar quadratic along the ray.
    if nsq > 0.0 {
        for c in &problem.constraints {
            let slope = dot(&c.gradient, &xi_star);
            if slope < 0.0 {
                candidates.push(-slope / (beta * nsq));
            }
        }
    }
    let (mut t_best, mut f_best) =
        candidates
            .iter()
            .map(|&t| (t, worst(t)))
            .fold(
                (0.0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
    // The max of convex quadratics is convex in t: refine by golden section.
    let (mut lo, mut hi) = (0.0, (2.0 * t_best).max(1e-12));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if worst(x1) < worst(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let t_ref = 0.5 * (lo + hi);
    let f_ref = worst(t_ref);
    if f_ref < f_best {
        t_best = t_ref;
        f_best = f_ref;
    }
    let margin = 1e-12 * scale;
    if f_best < -margin {
        SlaterProbe {
            strictly_feasible: true,
            witness: Some(xi_star.iter().map(|v| t_best * v).collect()),
            linearized: Some(xi_star),
        }
    } else {
        SlaterProbe {
            strictly_feasible: false,
            witness: None,
            linearized: Some(xi_star),
        }
    }
}

/// Assembles the estimated subproblem at `theta`: one constraint per estimated
/// cost value function plus the exact bounding constraint `‖θ‖² − C ≤ 0`.
pub fn build_subproblem(
    theta: &[f64],
    estimates: &EstimateBundle,
    alpha: f64,
    beta: &Beta,
    bound_c: f64,
) -> Result<QcqpProblem> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    if !(bound_c > 0.0) {
        return Err(Error::InvalidArgument("bound C must be positive".into()));
    }
    let q = estimates.num_constraints();
    if estimates.gradients.len() != q + 1 {
        return Err(Error::Dimension {
            what: "gradient estimates",
            expected: q + 1,
            got: estimates.gradients.len(),
        });
    }
    let d = theta.len();
    for g in &estimates.gradients {
        if g.len() != d {
            return Err(Error::Dimension {
                what: "gradient estimate",
                expected: d,
                got: g.len(),
            });
        }
    }
    let mut constraints: Vec<Constraint> = (1..=q)
        .map(|j| Constraint::new(alpha * estimates.values[j], estimates.gradients[j].clone()))
        .collect();
    constraints.push(bounding_constraint(theta, alpha, bound_c));
    QcqpProblem::new(
        estimates.gradients[0].clone(),
        constraints,
        beta.eval(theta),
    )
}

/// `(α(‖θ‖² − C), 2θ)`.
pub fn bounding_constraint(theta: &[f64], alpha: f64, bound_c: f64) -> Constraint {
    Constraint::new(
        alpha * (norm_sq(theta) - bound_c),
        theta.iter().map(|t| 2.0 * t).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g0: &[f64], cons: &[(f64, &[f64])], beta: f64) -> QcqpProblem {
        QcqpProblem::new(
            g0.to_vec(),
            cons.iter()
                .map(|(a, g)| Constraint::new(*a, g.to_vec()))
                .collect(),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn rejects_nonpositive_beta_and_bad_dims() {
        assert!(QcqpProblem::new(vec![1.0], vec![], 0.0).is_err());
        assert!(
            QcqpProblem::new(vec![1.0, 0.0], vec![Constraint::new(0.0, vec![1.0])], 1.0).is_err()
        );
    }

    #[test]
    fn inactive_constraint_gives_unconstrained_minimizer() {
        let prob = p(&[1.0, 0.0], &[(-10.0, &[0.0, 1.0])], 1.0);
        let s = solve_default(&prob);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.xi[0] + 1.0).abs() < 1e-12 && s.xi[1].abs() < 1e-12);
        assert_eq!(s.multipliers, vec![0.0]);
        assert_eq!(kkt_residual(&prob, &s), 0.0);
    }

    #[test]
    fn active_constraint_projects_onto_ball() {
        // ‖ξ + (1,0)‖² ≤ 1, target (2,0) -> ξ = 0, u = 2
        let prob = p(&[-2.0, 0.0], &[(0.0, &[1.0, 0.0])], 1.0);
        let s = solve_default(&prob);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(s.xi.iter().all(|v| v.abs() < 1e-8), "{:?}", s.xi);
        assert!((s.multipliers[0] - 2.0).abs() < 1e-6, "{:?}", s.multipliers);
        assert!(s.kkt_residual <= 1e-8 * prob.data_scale());
        assert_eq!(s.active_set, vec![0]);
    }

    #[test]
    fn empty_ball_is_infeasible() {
        let prob = p(&[1.0, 0.0], &[(10.0, &[0.0, 0.0])], 1.0);
        let s = solve_default(&prob);
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn disjoint_balls_are_infeasible() {
        // ‖ξ + (2,0)‖² ≤ 1 and ‖ξ − (2,0)‖² ≤ 1 do not intersect.
        let prob = p(&[0.0, 1.0], &[(1.5, &[2.0, 0.0]), (1.5, &[-2.0, 0.0])], 1.0);
        let s = solve_default(&prob);
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn closed_form_examples() {
        let g1 = [1.0, 0.0];
        assert_eq!(
            closed_form_direction(&[1.0, 2.0], &[&g1], &[0.0], 1.0),
            vec![-1.0, -2.0]
        );
        let xi = closed_form_direction(&[-2.0, 0.0], &[&g1], &[2.0], 1.0);
        assert!(xi.iter().all(|v| v.abs() < 1e-15));
        let xi = closed_form_direction(&[1.0, 1.0], &[&[1.0, 1.0]], &[1.0], 1.0);
        assert_eq!(xi, vec![-1.0, -1.0]);
    }

    #[test]
    fn kkt_residual_grows_with_perturbation() {
        let prob = p(&[-2.0, 0.0], &[(0.0, &[1.0, 0.0])], 1.0);
        let exact = QcqpSolution {
            xi: vec![0.0, 0.0],
            multipliers: vec![2.0],
            status: SolveStatus::Optimal,
            kkt_residual: 0.0,
            active_set: vec![0],
            iterations: 0,
        };
        assert!(kkt_residual(&prob, &exact) < 1e-15);
        let pert = QcqpSolution {
            xi: vec![0.1, 0.0],
            ..exact
        };
        assert!(kkt_residual(&prob, &pert) >= 0.1);
    }

    #[test]
    fn slater_probe_examples() {
        let interior = p(
            &[1.0, 0.0],
            &[(-1.0, &[0.0, 1.0]), (-2.0, &[1.0, 1.0])],
            1.0,
        );
        let pr = slater_probe(&interior);
        assert!(pr.strictly_feasible);
        let w = pr.witness.unwrap();
        assert!(interior.constraint_values(&w).iter().all(|v| *v < 0.0));

        // min_t 1 − t + t²/2 = 1/2 > 0: no strict point along the ray.
        let tight = p(&[0.0, 0.0], &[(1.0, &[-1.0, 0.0])], 1.0);
        assert!(!slater_probe(&tight).strictly_feasible);

        let loose = p(&[0.0, 0.0], &[(1.0, &[-1.0, 0.0])], 0.1);
        let pr = slater_probe(&loose);
        assert!(pr.strictly_feasible);
        assert!(loose.constraint_values(pr.witness.as_ref().unwrap())[0] < 0.0);
    }

    #[test]
    fn linearized_infeasible_probe() {
        let prob = p(&[0.0], &[(1.0, &[0.0])], 1.0);
        let pr = slater_probe(&prob);
        assert!(!pr.strictly_feasible && pr.witness.is_none());
    }

    #[test]
    fn build_subproblem_examples() {
        let est = EstimateBundle::from_parts(
            vec![0.0, -1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            1,
            1,
            0,
        );
        let prob = build_subproblem(&[0.0, 0.0], &est, 1.0, &Beta::Constant(1.0), 4.0).unwrap();
        assert_eq!(prob.constraints()[0], Constraint::new(-1.0, vec![0.0, 1.0]));
        assert_eq!(prob.constraints()[1], Constraint::new(-4.0, vec![0.0, 0.0]));

        let prob = build_subproblem(&[2.0, 0.0], &est, 1.0, &Beta::Constant(1.0), 4.0).unwrap();
        assert_eq!(prob.constraints()[1], Constraint::new(0.0, vec![4.0, 0.0]));

        let bad = EstimateBundle::from_parts(
            vec![0.0, -1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0, 3.0]],
            1,
            1,
            0,
        );
        assert!(build_subproblem(&[0.0, 0.0], &bad, 1.0, &Beta::Constant(1.0), 4.0).is_err());
    }
}
