//! Deterministic safe gradient flow on problems with known value functions:
//! forward-Euler steps `θ⁺ = θ + h ℛ(θ)` where `ℛ(θ)` solves the subproblem
//! built from exact `Vⱼ`, `∇Vⱼ`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, nonneg_qp_small, norm, norm_sq};
use crate::qcqp::{self, Beta, Constraint, QcqpProblem, QcqpSolution, SolveStatus, SolverOptions};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A differentiable scalar function.
#[derive(Clone)]
pub struct Smooth {
    pub value: ValueFn,
    pub gradient: GradFn,
}

impl Smooth {
    pub fn new<F, G>(value: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

/// `min V₀(θ)  s.t.  Vⱼ(θ) ≤ 0`.
#[derive(Clone)]
pub struct AnalyticProblem {
    pub name: &'static str,
    pub dim: usize,
    pub objective: Smooth,
    pub constraints: Vec<Smooth>,
    /// Lipschitz constants of `∇Vⱼ`, one per constraint.
    pub lipschitz: Vec<f64>,
    /// Lipschitz constant of `∇V₀` over the region the flow visits.
    pub objective_lipschitz: f64,
    /// Known KKT points with their multipliers.
    pub kkt_points: Vec<(Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Debug for AnalyticProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constraints", &self.constraints.len())
            .finish()
    }
}

impl AnalyticProblem {
    /// Half the constraint-side limit, further capped by `1/L₀` so the Euler
    /// step on the objective does not oscillate.
    pub fn stepsize(&self, alpha: f64, beta: f64) -> f64 {
        let h = 0.5 * max_stepsize(alpha, beta, &self.lipschitz);
        if self.objective_lipschitz > 0.0 {
            h.min(1.0 / self.objective_lipschitz)
        } else {
            h
        }
    }

    pub fn values(&self, theta: &[f64]) -> Vec<f64> {
        std::iter::once(&self.objective)
            .chain(&self.constraints)
            .map(|f| (f.value)(theta))
            .collect()
    }

    pub fn max_violation(&self, theta: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.value)(theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn fixture(id: &str) -> Result<Self> {
        match id {
            "disk" => Ok(disk_linear([1.0, 1.0])),
            "disk-axis" => Ok(disk_linear([1.0, 0.0])),
            "box" => Ok(curved_box()),
            "rosenbrock" => Ok(rosenbrock_disk()),
            _ => Err(Error::InvalidArgument(format!(
                "unknown fixture '{id}' (expected one of: {})",
                FIXTURES.join(", ")
            ))),
        }
    }
}

pub const FIXTURES: [&str; 4] = ["disk", "disk-axis", "box", "rosenbrock"];

fn unit_disk() -> Smooth {
    Smooth::new(
        |x| norm_sq(x) - 1.0,
        |x| x.iter().map(|v| 2.0 * v).collect(),
    )
}

/// `min cᵀx  s.t. ‖x‖² ≤ 1`.
pub fn disk_linear(c: [f64; 2]) -> AnalyticProblem {
    let n = c[0].hypot(c[1]);
    let star = vec![-c[0] / n, -c[1] / n];
    AnalyticProblem {
        name: "disk",
        dim: 2,
        objective: Smooth::new(move |x| c[0] * x[0] + c[1] * x[1], move |_| c.to_vec()),
        constraints: vec![unit_disk()],
        lipschitz: vec![2.0],
        objective_lipschitz: 0.0,
        kkt_points: vec![(star, vec![n / 2.0])],
    }
}

/// `min ½‖x − (2,2)‖²` under two gently curved halfspaces
/// `xₖ − 1 + 0.1(xₖ − 1)² ≤ 0`; both are active at `(1, 1)` with `u = (1, 1)`.
pub fn curved_box() -> AnalyticProblem {
    let side = |k: usize| {
        Smooth::new(
            move |x| x[k] - 1.0 + 0.1 * (x[k] - 1.0).powi(2),
            move |x| {
                let mut g = vec![0.0; 2];
                g[k] = 1.0 + 0.2 * (x[k] - 1.0);
                g
            },
        )
    };
    AnalyticProblem {
        name: "box",
        dim: 2,
        objective: Smooth::new(
            |x| 0.5 * ((x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2)),
            |x| vec![x[0] - 2.0, x[1] - 2.0],
        ),
        constraints: vec![side(0), side(1)],
        lipschitz: vec![0.2, 0.2],
        objective_lipschitz: 1.0,
        kkt_points: vec![(vec![1.0, 1.0], vec![1.0, 1.0])],
    }
}

const ROSENBROCK_B: f64 = 10.0;

/// `min (1 − x)² + 10(y − x²)²  s.t. ‖(x, y)‖² ≤ 1`.
pub fn rosenbrock_disk() -> AnalyticProblem {
    let b = ROSENBROCK_B;
    AnalyticProblem {
        name: "rosenbrock",
        dim: 2,
        objective: Smooth::new(
            move |v| (1.0 - v[0]).powi(2) + b * (v[1] - v[0] * v[0]).powi(2),
            move |v| {
                let r = v[1] - v[0] * v[0];
                vec![-2.0 * (1.0 - v[0]) - 4.0 * b * v[0] * r, 2.0 * b * r]
            },
        ),
        constraints: vec![unit_disk()],
        lipschitz: vec![2.0],
        // Hessian norm bound on the disk of radius 1.2.
        objective_lipschitz: 200.0,
        // Boundary minimizer from a dense angular scan plus golden-section refinement.
        kkt_points: vec![(
            vec![0.7887404935951198, 0.614726308013027],
            vec![0.12013896136239907],
        )],
    }
}

/// Subproblem with exact data at `theta`.
pub fn subproblem(
    problem: &AnalyticProblem,
    theta: &[f64],
    alpha: f64,
    beta: &Beta,
) -> Result<QcqpProblem> {
    if theta.len() != problem.dim {
        return Err(Error::Dimension {
            what: "theta",
            expected: problem.dim,
            got: theta.len(),
        });
    }
    let cons = problem
        .constraints
        .iter()
        .map(|c| Constraint::new(alpha * (c.value)(theta), (c.gradient)(theta)))
        .collect();
    QcqpProblem::new((problem.objective.gradient)(theta), cons, beta.eval(theta))
}

/// `ℛ_{α,β}(θ)`. An infeasible subproblem is reported through the status.
pub fn rsgf_map(
    problem: &AnalyticProblem,
    theta: &[f64],
    alpha: f64,
    beta: &Beta,
    opts: SolverOptions,
) -> Result<QcqpSolution> {
    let p = subproblem(problem, theta, alpha, beta)?;
    Ok(qcqp::solve(&p, opts))
}

/// `min{1/α, β/L₁, …}`; zero Lipschitz constants impose nothing.
pub fn max_stepsize(alpha: f64, beta: f64, lipschitz: &[f64]) -> f64 {
    lipschitz
        .iter()
        .filter(|l| **l > 0.0)
        .map(|l| beta / l)
        .fold(1.0 / alpha, f64::min)
}

/// Stepsize rule `hᵢ`, with `i` starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant(f64),
    /// `1/(α√i)`
    InvSqrt {
        alpha: f64,
    },
    /// `c/i`
    Harmonic {
        c: f64,
    },
}

impl Schedule {
    pub fn step(&self, i: usize) -> f64 {
        let i = i.max(1) as f64;
        match *self {
            Schedule::Constant(h) => h,
            Schedule::InvSqrt { alpha } => 1.0 / (alpha * i.sqrt()),
            Schedule::Harmonic { c } => c / i,
        }
    }

    /// Whether `hᵢ → 0` and `Σ hᵢ = ∞`.
    pub fn vanishing_nonsummable(&self) -> bool {
        !matches!(self, Schedule::Constant(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub is_kkt: bool,
    pub residual: f64,
    pub multipliers: Vec<f64>,
}

/// Stationarity check at `theta`: solves
/// `min_{u ≥ 0} ‖∇V₀ + Σ uⱼ∇Vⱼ‖² + Σ (uⱼVⱼ)²` (nonnegative least squares with
/// complementarity rows) and reports the root of the optimum together with
/// the worst constraint violation.
pub fn kkt_check(problem: &AnalyticProblem, theta: &[f64], tol: f64) -> KktReport {
    let g0 = (problem.objective.gradient)(theta);
    let grads: Vec<Vec<f64>> = problem
        .constraints
        .iter()
        .map(|c| (c.gradient)(theta))
        .collect();
    let vals: Vec<f64> = problem
        .constraints
        .iter()
        .map(|c| (c.value)(theta))
        .collect();
    let m = grads.len();
    let q = nalgebra::DMatrix::from_fn(m, m, |r, s| {
        dot(&grads[r], &grads[s]) + if r == s { vals[r] * vals[r] } else { 0.0 }
    });
    let c: Vec<f64> = grads.iter().map(|g| -dot(g, &g0)).collect();
    let u = nonneg_qp_small(&q, &c, 1e-12).unwrap_or_else(|| vec![0.0; m]);
    let mut stat = g0.clone();
    for (g, uj) in grads.iter().zip(&u) {
        crate::linalg::axpy(*uj, g, &mut stat);
    }
    let comp: f64 = vals.iter().zip(&u).map(|(v, uj)| (v * uj).powi(2)).sum();
    let viol = vals.iter().fold(0.0f64, |a, v| a.max(*v));
    let residual = (norm_sq(&stat) + comp).sqrt().max(viol);
    KktReport {
        is_kkt: residual <= tol,
        residual,
        multipliers: u,
    }
}

/// Per-iteration record of an integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub iterates: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    pub multipliers: Vec<Vec<f64>>,
    pub steps: Vec<f64>,
    /// `[V₀, V₁, …]` at every iterate.
    pub values: Vec<Vec<f64>>,
    /// `kkt_check` residual at every iterate.
    pub kkt_residuals: Vec<f64>,
    pub statuses: Vec<SolveStatus>,
    /// Set when integration stopped before the requested number of steps.
    pub stopped_early: Option<String>,
}

impl FlowTrace {
    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trace has the initial iterate")
    }

    /// Writes one row per iterate; direction columns are empty on the last.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.iterates[0].len();
        let q = self.values[0].len() - 1;
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "# rsgf flow trace, schema v1")?;
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["iter".to_string(), "h".into()];
        header.extend((0..d).map(|k| format!("theta_{k}")));
        header.extend((0..=q).map(|j| format!("v_{j}")));
        header.push("xi_norm".into());
        header.extend((1..=q).map(|j| format!("u_{j}")));
        header.extend(["status".into(), "kkt_residual".into()]);
        out.write_record(&header).map_err(csv_err)?;
        for i in 0..self.iterates.len() {
            let mut row = vec![i.to_string()];
            let has_step = i < self.directions.len();
            row.push(if has_step {
                self.steps[i].to_string()
            } else {
                String::new()
            });
            row.extend(self.iterates[i].iter().map(|v| v.to_string()));
            row.extend(self.values[i].iter().map(|v| v.to_string()));
            if has_step {
                row.push(norm(&self.directions[i]).to_string());
                row.extend(self.multipliers[i].iter().map(|v| v.to_string()));
                row.push(self.statuses[i].to_string());
            } else {
                row.extend(std::iter::repeat_n(String::new(), q + 2));
            }
            row.push(self.kkt_residuals[i].to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub alpha: f64,
    pub beta: Beta,
    pub schedule: Schedule,
    pub iters: usize,
    pub solver: SolverOptions,
    /// Tolerance for the per-iterate KKT check.
    pub kkt_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: Beta::Constant(1.0),
            schedule: Schedule::Constant(0.1),
            iters: 1000,
            solver: SolverOptions {
                tol: 1e-12,
                max_iters: 10_000,
            },
            kkt_tol: 1e-4,
        }
    }
}

/// Forward-Euler integration. Stops with a partial trace when a subproblem is
/// infeasible; non-finite values abort with the iteration index.
pub fn integrate(
    problem: &AnalyticProblem,
    theta0: &[f64],
    opts: &FlowOptions,
) -> Result<FlowTrace> {
    opts.beta.validate()?;
    if !(opts.alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let mut theta = theta0.to_vec();
    let mut trace = FlowTrace {
        iterates: vec![theta.clone()],
        directions: Vec::new(),
        multipliers: Vec::new(),
        steps: Vec::new(),
        values: vec![problem.values(&theta)],
        kkt_residuals: vec![kkt_check(problem, &theta, opts.kkt_tol).residual],
        statuses: Vec::new(),
        stopped_early: None,
    };
    for i in 1..=opts.iters {
        let sol = rsgf_map(problem, &theta, opts.alpha, &opts.beta, opts.solver)?;
        if sol.status == SolveStatus::Infeasible {
            trace.stopped_early = Some(format!("subproblem infeasible at iteration {i}"));
            break;
        }
        if !all_finite(&sol.xi) {
            return Err(Error::NonFiniteAt {
                iteration: i,
                what: "direction".into(),
            });
        }
        let h = opts.schedule.step(i);
        for (t, x) in theta.iter_mut().zip(&sol.xi) {
            *t += h * x;
        }
        let vals = problem.values(&theta);
        if !all_finite(&theta) || !all_finite(&vals) {
            return Err(Error::NonFiniteAt {
                iteration: i,
                what: "iterate".into(),
            });
        }
        trace.steps.push(h);
        trace.statuses.push(sol.status);
        trace.directions.push(sol.xi);
        trace.multipliers.push(sol.multipliers);
        trace.iterates.push(theta.clone());
        trace.values.push(vals);
        trace
            .kkt_residuals
            .push(kkt_check(problem, &theta, opts.kkt_tol).residual);
    }
    Ok(trace)
}
