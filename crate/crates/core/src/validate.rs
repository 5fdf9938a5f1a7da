//! Estimator validation against the exact tabular oracle: unbiasedness,
//! uniform bounds, tail calibration, and the one-step safety guarantee.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{self, Constants};
use crate::config::ValidateSpec;
use crate::error::{Error, Result};
use crate::estimate::{self, ClipRange, StatInputs, ZeroBaseline};
use crate::linalg::{dist, norm};
use crate::mdp::{oracle, rollout, BehaviorTag, Cmdp, Episode, TabularCmdp};
use crate::policy::{DiscretizedPolicy, Policy};
use crate::qcqp::{self, Beta, SolveStatus};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    /// No check failed (skipped ones are fine).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<7} {:<28} {}",
                c.outcome.to_string(),
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// How a batch is split between the target and a behavior policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMix {
    OnPolicy,
    OffPolicy,
    /// First half from the target, second half from the behavior policy.
    Mixed,
}

impl BatchMix {
    fn name(self) -> &'static str {
        match self {
            BatchMix::OnPolicy => "on-policy",
            BatchMix::OffPolicy => "off-policy",
            BatchMix::Mixed => "mixed",
        }
    }
}

/// Target and behavior parameters used throughout the suite.
pub const TARGET_THETA: [f64; 2] = [0.4, -0.3];
pub const BEHAVIOR_THETA: [f64; 2] = [-0.2, 0.5];
/// Deviation levels for the tail calibration.
pub const TAIL_EPSILONS: [f64; 3] = [0.1, 0.5, 1.0];

/// Draws one batch; episode `k` of batch `b` has its own stream.
pub fn sample_batch(
    spec: &TabularCmdp,
    target: &DiscretizedPolicy,
    behavior: &DiscretizedPolicy,
    mix: BatchMix,
    size: usize,
    seed: u64,
    b: u64,
) -> Result<Vec<Episode>> {
    let t_tag = BehaviorTag {
        iteration: 0,
        theta: Arc::new(target.theta.clone()),
    };
    let b_tag = BehaviorTag {
        iteration: 0,
        theta: Arc::new(behavior.theta.clone()),
    };
    (0..size)
        .map(|k| {
            let use_target = match mix {
                BatchMix::OnPolicy => true,
                BatchMix::OffPolicy => false,
                BatchMix::Mixed => k < size / 2,
            };
            let mut rng = stream(seed, Purpose::Validation, b, k as u64);
            if use_target {
                rollout(spec, target, t_tag.clone(), k, &mut rng)
            } else {
                rollout(spec, behavior, b_tag.clone(), k, &mut rng)
            }
        })
        .collect()
}

struct Draws {
    values: Vec<Vec<f64>>,
    gradients: Vec<Vec<Vec<f64>>>,
    n_bar: usize,
    n_tilde: usize,
}

fn draw(
    spec: &TabularCmdp,
    target: &DiscretizedPolicy,
    behavior: &DiscretizedPolicy,
    mix: BatchMix,
    vs: &ValidateSpec,
    seed: u64,
) -> Result<Draws> {
    let nr = spec.num_rewards();
    let salt = match mix {
        BatchMix::OnPolicy => 0,
        BatchMix::OffPolicy => 1 << 40,
        BatchMix::Mixed => 2 << 40,
    };
    let results = crate::par::map_indexed(vs.batches, |b| -> Result<estimate::EstimateBundle> {
        let eps = sample_batch(
            spec,
            target,
            behavior,
            mix,
            vs.batch_size,
            seed,
            salt + b as u64,
        )?;
        let refs: Vec<&Episode> = eps.iter().collect();
        estimate::estimate_all(&refs, target, nr, spec.gamma, &ZeroBaseline, vs.clip)
    });
    let mut d = Draws {
        values: vec![Vec::with_capacity(vs.batches); nr],
        gradients: vec![Vec::with_capacity(vs.batches); nr],
        n_bar: 0,
        n_tilde: 0,
    };
    for r in results {
        let e = r?;
        d.n_bar = e.on_policy_count;
        d.n_tilde = e.off_policy_count;
        for j in 0..nr {
            d.values[j].push(e.values[j]);
            d.gradients[j].push(e.gradients[j].clone());
        }
    }
    Ok(d)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn constants_for(spec: &TabularCmdp, policy: &DiscretizedPolicy, j: usize) -> Result<Constants> {
    let lb = policy.lipschitz_bounds();
    let c = estimate::stat_constants(
        &StatInputs {
            b_j: spec.reward_bounds()[j],
            b_hat: 0.0,
            gamma: spec.gamma,
            horizon: spec.horizon,
            log_nu: policy.log_nu(),
            b_tilde: lb.b_tilde,
        },
        None,
    )?;
    Ok(Constants {
        phi: c.phi,
        phi_bar: c.phi_bar,
        psi: c.psi,
        psi_bar: c.psi_bar,
    })
}

fn check(name: String, ok: bool, detail: String) -> Check {
    Check {
        name,
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        detail,
    }
}

/// Runs the full suite on the two-state CMDP.
pub fn run_validation(vs: &ValidateSpec, seed: u64) -> Result<ValidationReport> {
    if vs.batches < 2 || vs.batch_size < 2 {
        return Err(Error::InvalidArgument(
            "validation needs at least 2 batches of 2 episodes".into(),
        ));
    }
    let spec = TabularCmdp::two_state();
    let base = spec.matching_policy()?;
    let target = base.with_params(&TARGET_THETA)?;
    let behavior = base.with_params(&BEHAVIOR_THETA)?;
    let truth = oracle(&spec, &target)?;
    let nr = spec.num_rewards();
    let d = target.num_params();
    let mut checks = Vec::new();

    for mix in [BatchMix::OnPolicy, BatchMix::OffPolicy, BatchMix::Mixed] {
        let draws = draw(&spec, &target, &behavior, mix, vs, seed)?;

        let name = format!("unbiased {}", mix.name());
        if vs.clip.is_some() {
            checks.push(Check {
                name,
                outcome: Outcome::Skipped,
                detail: "clipped weights are biased by design".into(),
            });
        } else {
            let mut worst: f64 = 0.0;
            for j in 0..nr {
                let (m, se) = mean_se(&draws.values[j]);
                worst = worst.max((m - truth.values[j]).abs() / se.max(1e-300));
                for l in 0..d {
                    let col: Vec<f64> = draws.gradients[j].iter().map(|g| g[l]).collect();
                    let (m, se) = mean_se(&col);
                    worst = worst.max((m - truth.gradients[j][l]).abs() / se.max(1e-300));
                }
            }
            checks.push(check(
                name,
                worst <= 4.0,
                format!("max deviation {worst:.2} SE (limit 4)"),
            ));
        }

        let mut inside = 0usize;
        let mut total = 0usize;
        for j in 0..nr {
            let c = constants_for(&spec, &target, j)?;
            let vb = estimate::uniform_bound(draws.n_bar, draws.n_tilde, c.phi, c.phi_bar);
            let gb = estimate::uniform_bound(draws.n_bar, draws.n_tilde, c.psi, c.psi_bar);
            for (v, g) in draws.values[j].iter().zip(&draws.gradients[j]) {
                total += 1;
                if v.abs() <= vb * (1.0 + 1e-12) && g.iter().all(|x| x.abs() <= gb * (1.0 + 1e-12))
                {
                    inside += 1;
                }
            }
        }
        checks.push(check(
            format!("uniform bounds {}", mix.name()),
            inside == total,
            format!("{inside}/{total} estimates inside"),
        ));

        let mut slack = f64::INFINITY;
        for j in 0..nr {
            let c = constants_for(&spec, &target, j)?;
            for eps in TAIL_EPSILONS {
                let n = draws.values[j].len() as f64;
                let fv = draws.values[j]
                    .iter()
                    .filter(|v| (*v - truth.values[j]).abs() <= eps)
                    .count() as f64
                    / n;
                let bv =
                    estimate::tail_bound_value(eps, draws.n_bar, draws.n_tilde, c.phi, c.phi_bar);
                let fg = draws.gradients[j]
                    .iter()
                    .filter(|g| dist(g, &truth.gradients[j]) <= eps)
                    .count() as f64
                    / n;
                let bg = estimate::tail_bound_gradient(
                    eps,
                    draws.n_bar,
                    draws.n_tilde,
                    c.psi,
                    c.psi_bar,
                    d,
                );
                slack = slack.min(fv - bv).min(fg - bg);
            }
        }
        checks.push(check(
            format!("tail calibration {}", mix.name()),
            slack >= 0.0,
            format!("min(empirical - bound) = {slack:.4}"),
        ));
    }

    let safety = safety_check(&spec, &base, vs.safety_steps, vs.delta, seed)?;
    checks.push(check(
        "safety one-step".into(),
        safety.fraction() >= 0.8,
        format!(
            "{}/{} certified steps stay safe (need 80%), mean batch {:.0}",
            safety.safe,
            safety.certified,
            safety.mean_batch()
        ),
    ));
    Ok(ValidationReport { checks })
}

/// Outcome of the certified-step experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyStats {
    pub certified: usize,
    pub safe: usize,
    pub skipped: usize,
    pub episodes: usize,
}

impl SafetyStats {
    pub fn fraction(&self) -> f64 {
        if self.certified == 0 {
            0.0
        } else {
            self.safe as f64 / self.certified as f64
        }
    }

    pub fn mean_batch(&self) -> f64 {
        if self.certified == 0 {
            0.0
        } else {
            self.episodes as f64 / self.certified as f64
        }
    }
}

/// Largest batch the safety check will draw for one step.
pub const SAFETY_BATCH_CAP: usize = 200_000;

/// Draws random starting parameters with `V̂₁ ≤ 0`, sizes the on-policy
/// batch with [`certify::episodes_required`] at that batch's own margin, takes
/// the step and checks the true `V₁` afterwards.
pub fn safety_check(
    spec: &TabularCmdp,
    base: &DiscretizedPolicy,
    steps: usize,
    delta: f64,
    seed: u64,
) -> Result<SafetyStats> {
    let nr = spec.num_rewards();
    let alpha = 1.0;
    let beta = 1.0;
    let lb = base.lipschitz_bounds();
    let b = spec.reward_bounds();
    let l_j: Vec<f64> = (1..nr)
        .map(|j| certify::lipschitz_l_j(b[j], lb.l, lb.b_tilde, spec.gamma, spec.horizon))
        .collect();
    let h = 0.5 * crate::flow::max_stepsize(alpha, beta, &l_j);
    let consts: Vec<Constants> = (1..nr)
        .map(|j| constants_for(spec, base, j))
        .collect::<Result<_>>()?;
    let d = base.num_params();
    let mut stats = SafetyStats::default();
    let mut attempt = 0u64;
    while stats.certified < steps {
        attempt += 1;
        if attempt > 20 * steps as u64 + 100 {
            break;
        }
        let mut rng = stream(seed, Purpose::Validation, 1 << 50, attempt);
        let theta: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let pol = base.with_params(&theta)?;
        let tag = BehaviorTag {
            iteration: 0,
            theta: Arc::new(theta.clone()),
        };
        let mut n = 64usize;
        let mut done = false;
        for round in 0..6u64 {
            let eps: Vec<Episode> = crate::par::map_indexed(n, |k| {
                let mut r = stream(
                    seed,
                    Purpose::Validation,
                    (2 << 50) + attempt * 8 + round,
                    k as u64,
                );
                rollout(spec, &pol, tag.clone(), k, &mut r)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            let refs: Vec<&Episode> = eps.iter().collect();
            let est = estimate::estimate_all(&refs, &pol, nr, spec.gamma, &ZeroBaseline, None)?;
            if est.values[1..].iter().any(|v| *v > 0.0) {
                break;
            }
            let problem = qcqp::build_subproblem(&theta, &est, alpha, &Beta::Constant(beta), 1e6)?;
            let sol = qcqp::solve_default(&problem);
            if sol.status == SolveStatus::Infeasible {
                break;
            }
            let r = norm(&sol.xi);
            let mut need = 0u64;
            let mut ok = true;
            for j in 1..nr {
                let m = certify::margin(est.values[j], alpha, h, beta, l_j[j - 1], r);
                match certify::episodes_required(m, delta, &consts[j - 1], d) {
                    Ok(req) => need = need.max(req.on_policy()),
                    Err(_) => ok = false,
                }
            }
            if !ok || need as usize > SAFETY_BATCH_CAP {
                break;
            }
            if (n as u64) < need {
                n = need as usize;
                continue;
            }
            let next: Vec<f64> = theta.iter().zip(&sol.xi).map(|(t, x)| t + h * x).collect();
            let after = oracle(spec, &base.with_params(&next)?)?;
            stats.certified += 1;
            stats.episodes += n;
            if after.values[1..].iter().all(|v| *v <= 0.0) {
                stats.safe += 1;
            }
            done = true;
            break;
        }
        if !done {
            stats.skipped += 1;
        }
    }
    Ok(stats)
}

/// Suite settings small enough for unit tests.
pub fn quick_spec(clip: Option<ClipRange>) -> ValidateSpec {
    ValidateSpec {
        batches: 2_000,
        batch_size: 10,
        safety_steps: 20,
        delta: 0.1,
        clip,
    }
}
