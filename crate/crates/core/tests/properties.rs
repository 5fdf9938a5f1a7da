#![allow(clippy::type_complexity, clippy::needless_range_loop)]

use std::sync::Arc;

use proptest::prelude::*;

use rsgf::certify::{self, Constants};
use rsgf::config::ExperimentConfig;
use rsgf::envs::Nav2dEnv;
use rsgf::estimate::{self, StatInputs, ZeroBaseline};
use rsgf::flow::{self, AnalyticProblem, FlowOptions, Schedule};
use rsgf::linalg::{dist, norm_sq};
use rsgf::mdp::{oracle, rollout, BehaviorTag, Cmdp, Episode, TabularCmdp};
use rsgf::policy::{grid_centers, ActionBox, Policy, RbfGaussianPolicy, RbfMean};
use rsgf::qcqp::{self, Beta, Constraint, QcqpProblem, SolveStatus};
use rsgf::rng::episode_rng;
use rsgf::train::{self, BaselineSpec, ReplayRule, StepRule, TrainConfig};

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2)
}

fn problem_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<(f64, Vec<f64>)>, f64)> {
    (
        vec2(),
        prop::collection::vec((-2.0..1.0f64, vec2()), 0..=2),
        0.1..10.0f64,
    )
}

fn build(g0: &[f64], cons: &[(f64, Vec<f64>)], beta: f64) -> QcqpProblem {
    let cs = cons
        .iter()
        .map(|(a, g)| Constraint::new(*a, g.clone()))
        .collect();
    QcqpProblem::new(g0.to_vec(), cs, beta).unwrap()
}

fn objective(g0: &[f64], xi: &[f64]) -> f64 {
    0.5 * xi
        .iter()
        .zip(g0)
        .map(|(x, g)| (x + g) * (x + g))
        .sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn solve_agrees_with_closed_form((g0, cons, beta) in problem_strategy()) {
        let p = build(&g0, &cons, beta);
        let tol = 1e-10;
        let sol = qcqp::solve(&p, qcqp::SolverOptions { tol, ..Default::default() });
        if sol.status == SolveStatus::Optimal {
            let grads: Vec<&[f64]> = cons.iter().map(|(_, g)| g.as_slice()).collect();
            let cf = qcqp::closed_form_direction(&g0, &grads, &sol.multipliers, beta);
            prop_assert!(dist(&sol.xi, &cf) <= 10.0 * tol.max(1e-9), "{:?} vs {:?}", sol.xi, cf);
        }
    }

    #[test]
    fn enlarging_the_feasible_set_never_hurts((g0, cons, beta) in problem_strategy(), k in 0usize..2, shrink in 0.0..2.0f64) {
        prop_assume!(!cons.is_empty());
        let k = k % cons.len();
        let opts = qcqp::SolverOptions { tol: 1e-12, ..Default::default() };
        let a = qcqp::solve(&build(&g0, &cons, beta), opts);
        prop_assume!(a.status == SolveStatus::Optimal);
        let mut looser = cons.clone();
        looser[k].0 -= shrink;
        let b = qcqp::solve(&build(&g0, &looser, beta), opts);
        prop_assert_eq!(b.status, SolveStatus::Optimal);
        prop_assert!(objective(&g0, &b.xi) <= objective(&g0, &a.xi) + 1e-9);
    }

    #[test]
    fn flow_stays_feasible_from_feasible_starts(fix in 0usize..4, r in 0.0..1.0f64, ang in 0.0..std::f64::consts::TAU) {
        let p = AnalyticProblem::fixture(flow::FIXTURES[fix]).unwrap();
        let theta0 = match p.name {
            "box" => vec![r * ang.cos(), r * ang.sin()],
            "rosenbrock" => vec![0.9 * r * ang.cos(), 0.9 * r * ang.sin()],
            _ => vec![r * ang.cos(), r * ang.sin()],
        };
        prop_assume!(p.max_violation(&theta0) <= 0.0);
        let h = p.stepsize(1.0, 1.0);
        let opts = FlowOptions { schedule: Schedule::Constant(h), iters: 200, ..Default::default() };
        let trace = flow::integrate(&p, &theta0, &opts).unwrap();
        for th in &trace.iterates {
            prop_assert!(p.max_violation(th) <= 1e-9, "{} at {:?}", p.max_violation(th), th);
        }
    }

    #[test]
    fn enumeration_mass_is_one(theta in vec2(), p0 in 0.05..0.95f64, t in 0.05..0.95f64) {
        let mut spec = TabularCmdp::two_state();
        spec.initial = vec![p0, 1.0 - p0];
        spec.transitions[0][1] = vec![t, 1.0 - t];
        let pol = spec.matching_policy().unwrap().with_params(&theta).unwrap();
        let o = oracle(&spec, &pol).unwrap();
        prop_assert!((o.total_probability - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gaussian_density_integrates_to_one(theta in prop::collection::vec(-3.0..3.0f64, 3), s in -1.0..4.0f64, var in 0.05..2.0f64) {
        let rbf = RbfMean::new(grid_centers(&[0.0], &[3.0], &[3]), 0.5, 1).unwrap();
        let pol = RbfGaussianPolicy::new(rbf, vec![var], ActionBox::symmetric(2.0, 1))
            .unwrap()
            .with_params(&theta)
            .unwrap();
        // Composite Simpson on [−2, 2].
        let n = 4000;
        let hstep = 4.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let a = -2.0 + k as f64 * hstep;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pol.log_prob(&[s], &[a]).unwrap().exp();
        }
        prop_assert!((acc * hstep / 3.0 - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn density_respects_the_nu_floor(theta in prop::collection::vec(-5.0..5.0f64, 4), s in prop::collection::vec(-1.0..11.0f64, 2)) {
        let rbf = RbfMean::new(grid_centers(&[0.0, 0.0], &[10.0, 10.0], &[2, 1]), 0.5, 2).unwrap();
        let pol = RbfGaussianPolicy::new(rbf, vec![0.5, 0.5], ActionBox::symmetric(1.0, 2))
            .unwrap()
            .with_params(&theta)
            .unwrap();
        let nu = pol.log_nu();
        for i in 0..=10 {
            for j in 0..=10 {
                let a = [-1.0 + 0.2 * i as f64, -1.0 + 0.2 * j as f64];
                prop_assert!(pol.log_prob(&s, &a).unwrap() >= nu - 1e-12);
            }
        }
    }

    #[test]
    fn log_density_is_lipschitz_in_theta(t1 in prop::collection::vec(-3.0..3.0f64, 4), t2 in prop::collection::vec(-3.0..3.0f64, 4), s in prop::collection::vec(0.0..10.0f64, 2), a in prop::collection::vec(-1.0..1.0f64, 2)) {
        let rbf = RbfMean::new(grid_centers(&[0.0, 0.0], &[10.0, 10.0], &[2, 1]), 0.5, 2).unwrap();
        let base = RbfGaussianPolicy::new(rbf, vec![0.5, 0.5], ActionBox::symmetric(1.0, 2)).unwrap();
        let p1 = base.with_params(&t1).unwrap();
        let p2 = base.with_params(&t2).unwrap();
        let l = base.lipschitz_bounds().l_tilde;
        let gap = (p1.log_prob(&s, &a).unwrap() - p2.log_prob(&s, &a).unwrap()).abs();
        prop_assert!(gap <= l * dist(&t1, &t2) + 1e-12);
    }

    #[test]
    fn estimates_respect_uniform_bounds(tt in vec2(), tb in vec2(), n_on in 0usize..6, n_off in 0usize..6, seed in 0u64..1000) {
        prop_assume!(n_on + n_off > 0);
        let spec = TabularCmdp::two_state();
        let base = spec.matching_policy().unwrap();
        let target = base.with_params(&tt).unwrap();
        let behavior = base.with_params(&tb).unwrap();
        prop_assume!(tt != tb);
        let mut eps = Vec::new();
        for k in 0..n_on + n_off {
            let (p, th) = if k < n_on { (&target, &tt) } else { (&behavior, &tb) };
            let tag = BehaviorTag { iteration: 0, theta: Arc::new(th.clone()) };
            eps.push(rollout(&spec, p, tag, k, &mut episode_rng(seed, 0, k as u64)).unwrap());
        }
        let refs: Vec<&Episode> = eps.iter().collect();
        let est = estimate::estimate_all(&refs, &target, 2, spec.gamma, &ZeroBaseline, None).unwrap();
        let lb = base.lipschitz_bounds();
        for j in 0..2 {
            let c = estimate::stat_constants(&StatInputs {
                b_j: spec.reward_bounds()[j],
                b_hat: 0.0,
                gamma: spec.gamma,
                horizon: spec.horizon,
                log_nu: base.log_nu(),
                b_tilde: lb.b_tilde,
            }, None).unwrap();
            let vb = estimate::uniform_bound(n_on, n_off, c.phi, c.phi_bar);
            let gb = estimate::uniform_bound(n_on, n_off, c.psi, c.psi_bar);
            prop_assert!(est.values[j].abs() <= vb * (1.0 + 1e-12));
            for g in &est.gradients[j] {
                prop_assert!(g.abs() <= gb * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn tilde_constants_are_dominated_under_the_premise(gamma in 0.5..0.99f64, t in 1usize..20, log_nu in -3.0..-0.01f64, l in 0.01..5.0f64, r in 0.0..1.0f64) {
        let inp = StatInputs { b_j: 1.0, b_hat: 0.5, gamma, horizon: t, log_nu, b_tilde: 2.0 };
        // Premise exp((T+1)L̃‖θ − θ̄‖) ≤ ν^{−(T+1)}  ⟺  L̃‖θ − θ̄‖ ≤ −log ν.
        let d = r * (-log_nu) / l;
        let theta = [0.0, 0.0];
        let tb = [d, 0.0];
        let c = estimate::stat_constants(&inp, Some((&theta, &[&tb[..]], l))).unwrap();
        prop_assert!(c.phi_tilde[0] <= c.phi_bar * (1.0 + 1e-12));
        prop_assert!(c.psi_tilde[0] <= c.psi_bar * (1.0 + 1e-12));
    }

    #[test]
    fn episodes_required_is_monotone(m in 0.05..5.0f64, dm in 0.0..2.0f64, delta in 0.01..0.9f64, dd in 0.0..0.09f64, phi in 0.1..10.0f64) {
        let c = Constants { phi, phi_bar: phi, psi: phi, psi_bar: phi };
        let a = certify::episodes_required(m, delta, &c, 3).unwrap();
        let b = certify::episodes_required(m + dm, delta, &c, 3).unwrap();
        let d = certify::episodes_required(m, delta + dd, &c, 3).unwrap();
        prop_assert!(b.on_policy() <= a.on_policy());
        prop_assert!(d.on_policy() <= a.on_policy());
    }

    #[test]
    fn margin_is_monotone(v in -5.0..0.0f64, dv in 0.0..1.0f64, l in 0.0..10.0f64, dl in 0.0..5.0f64, r in 0.0..5.0f64) {
        let (alpha, h, beta) = (1.0, 0.1, 1.0);
        let base = certify::margin(v, alpha, h, beta, l, r);
        prop_assert!(certify::margin(v + dv, alpha, h, beta, l, r) <= base + 1e-15);
        prop_assert!(certify::margin(v, alpha, h, beta, l + dl, r) <= base + 1e-15);
    }

    #[test]
    fn nav_constraint_reward_one_sided_values(x in 0.01..0.5f64) {
        let env = Nav2dEnv::default();
        // Approach the left face of the first obstacle from outside it.
        let inside = env.constraint_reward(&[3.5 - x * 1e-6, 1.5]);
        prop_assert!(inside <= 0.0 && inside > -1e-7);
        let outside = env.constraint_reward(&[3.5 + x, 1.5]);
        prop_assert_eq!(outside, 1.0 - env.epsilon);
    }

    #[test]
    fn config_round_trip_with_overrides(k in 0usize..rsgf::config::PRESETS.len(), seed in 0..=i64::MAX as u64, out in "[a-z]{1,8}") {
        let mut c = ExperimentConfig::preset(rsgf::config::PRESETS[k]).unwrap();
        c.seed = seed;
        c.out = Some(out);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn training_never_leaves_the_ball(seed in 0u64..1000, c in 0.05..2.0f64, alpha in 0.5..5.0f64, h in 0.01..0.2f64, last_two in any::<bool>()) {
        let spec = TabularCmdp::two_state();
        let pol = spec.matching_policy().unwrap();
        let cfg = TrainConfig {
            iterations: 15,
            episodes_per_iter: 8,
            replay: if last_two { ReplayRule::LastTwo } else { ReplayRule::Current },
            alpha,
            beta: Beta::Constant(1.0),
            step: StepRule::Constant { h: h.min(1.0 / alpha) },
            bound_c: c,
            clip: None,
            baseline: BaselineSpec::Zero,
            delta: 0.1,
            seed,
            updates_per_iter: 1,
            checkpoint_every: 0,
        };
        let run = train::train::<_, _, ()>(&cfg, &spec, &pol, None).unwrap();
        for r in &run.rows {
            prop_assert!(r.theta_norm_sq - c <= 1e-9);
        }
        prop_assert!(norm_sq(&run.final_theta) - c <= 1e-9);
    }

    #[test]
    fn on_policy_estimates_match_a_weightless_reference(theta in vec2(), seed in 0u64..1000) {
        let spec = TabularCmdp::two_state();
        let pol = spec.matching_policy().unwrap().with_params(&theta).unwrap();
        let tag = BehaviorTag { iteration: 1, theta: Arc::new(theta.clone()) };
        let eps: Vec<Episode> = (0..20)
            .map(|k| rollout(&spec, &pol, tag.clone(), k, &mut episode_rng(seed, 1, k as u64)).unwrap())
            .collect();
        let refs: Vec<&Episode> = eps.iter().collect();
        let est = estimate::estimate_all(&refs, &pol, 2, spec.gamma, &ZeroBaseline, None).unwrap();
        prop_assert_eq!(est.off_policy_count, 0);
        for e in &eps {
            prop_assert_eq!(estimate::is_weight(e, &pol, None).unwrap(), 1.0);
        }
        // Plain REINFORCE with reward-to-go, no weights anywhere.
        for j in 0..2 {
            let sign = if j == 0 { -1.0 } else { 1.0 };
            let v: f64 = eps.iter().map(|e| e.discounted_return(j, spec.gamma)).sum::<f64>() / 20.0 * sign;
            prop_assert!((v - est.values[j]).abs() <= 1e-12);
            let mut g = vec![0.0; 2];
            for e in &eps {
                let rtg = estimate::reward_to_go(&e.rewards[j][..e.realized], spec.gamma);
                for t in 0..e.realized {
                    let sc = pol.grad_log_prob(&e.states[t], &e.actions[t]).unwrap();
                    let disc = spec.gamma.powi(t as i32);
                    for l in 0..2 {
                        g[l] += sign * disc * rtg[t] * sc[l] / 20.0;
                    }
                }
            }
            for l in 0..2 {
                prop_assert!((g[l] - est.gradients[j][l]).abs() <= 1e-12, "{:?} vs {:?}", g, est.gradients[j]);
            }
        }
    }
}

#[test]
fn variance_of_single_episode_estimates_is_within_the_bound() {
    let spec = TabularCmdp::two_state();
    let base = spec.matching_policy().unwrap();
    let target = base.with_params(&[0.4, -0.3]).unwrap();
    let behavior = base.with_params(&[-0.2, 0.5]).unwrap();
    let tag = BehaviorTag {
        iteration: 0,
        theta: Arc::new(behavior.theta.clone()),
    };
    let lb = base.lipschitz_bounds();
    for j in 0..spec.num_rewards() {
        let c = estimate::stat_constants(
            &StatInputs {
                b_j: spec.reward_bounds()[j],
                b_hat: 0.0,
                gamma: spec.gamma,
                horizon: spec.horizon,
                log_nu: base.log_nu(),
                b_tilde: lb.b_tilde,
            },
            None,
        )
        .unwrap();
        let xs: Vec<f64> = (0..10_000u64)
            .map(|k| {
                let e =
                    rollout(&spec, &behavior, tag.clone(), 0, &mut episode_rng(11, 0, k)).unwrap();
                estimate::estimate_value(j, &[&e], &target, spec.gamma, None).unwrap()
            })
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(var <= estimate::variance_bound(0, 1, c.phi, c.phi_bar));
    }
}
