//! Constrained MDPs, episode rollout, and exact enumeration oracles for small
//! tabular problems.
//!
//! Value functions follow the sign convention of the optimization problem:
//! `V₀ = −E[Σ γᵗ R₀]` (minimized) and `Vⱼ = E[Σ γᵗ Rⱼ]` for the constraints.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{DiscretizedPolicy, Policy};
use crate::rng::StreamRng;

/// Sign σⱼ applied to the discounted return of stream `j`.
pub fn sign(j: usize) -> f64 {
    if j == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: Vec<f64>,
    /// `R₀..R_q` evaluated on `(s, a, s')`.
    pub rewards: Vec<f64>,
    /// The episode ends after this transition.
    pub terminated: bool,
}

/// A constrained MDP with `q + 1` reward streams and a finite horizon.
pub trait Cmdp: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// `q + 1`.
    fn num_rewards(&self) -> usize;
    /// `T`: episodes have `T + 1` actions.
    fn horizon(&self) -> usize;
    fn gamma(&self) -> f64;
    /// Declared bounds `Bⱼ` with `|Rⱼ| ≤ Bⱼ`.
    fn reward_bounds(&self) -> Vec<f64>;
    fn initial_state(&self, rng: &mut StreamRng) -> Vec<f64>;
    fn step(&self, s: &[f64], a: &[f64], rng: &mut StreamRng) -> Result<Transition>;
}

/// Identifies the policy that generated an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTag {
    pub iteration: usize,
    pub theta: Arc<Vec<f64>>,
}

/// One trajectory `[s₀, a₀, …, s_T, a_T, s_{T+1}]`.
///
/// Episodes that terminate early keep the full-length arrays: the remaining
/// states repeat the last realized state, actions are zero, and rewards are
/// zero. `realized` counts the actions actually taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    /// `rewards[j][t] = Rⱼ(sₜ, aₜ, sₜ₊₁)`.
    pub rewards: Vec<Vec<f64>>,
    pub realized: usize,
    pub behavior: BehaviorTag,
    /// `Σₜ log ζ(aₜ|sₜ)` over realized steps.
    pub behavior_log_prob: f64,
    pub index: usize,
}

impl Episode {
    pub fn horizon(&self) -> usize {
        self.actions.len() - 1
    }

    pub fn truncated(&self) -> bool {
        self.realized < self.actions.len()
    }

    /// `Σₜ γᵗ Rⱼ`.
    pub fn discounted_return(&self, j: usize, gamma: f64) -> f64 {
        let mut g = 0.0;
        let mut disc = 1.0;
        for r in &self.rewards[j] {
            g += disc * r;
            disc *= gamma;
        }
        g
    }

    pub fn check_shape(&self, num_rewards: usize) -> Result<()> {
        let t1 = self.actions.len();
        if self.states.len() != t1 + 1 {
            return Err(Error::Dimension {
                what: "episode states",
                expected: t1 + 1,
                got: self.states.len(),
            });
        }
        if self.rewards.len() != num_rewards || self.rewards.iter().any(|r| r.len() != t1) {
            return Err(Error::Dimension {
                what: "episode rewards",
                expected: num_rewards,
                got: self.rewards.len(),
            });
        }
        Ok(())
    }
}

/// Samples one episode with `policy`.
pub fn rollout<E, P>(
    env: &E,
    policy: &P,
    behavior: BehaviorTag,
    index: usize,
    rng: &mut StreamRng,
) -> Result<Episode>
where
    E: Cmdp + ?Sized,
    P: Policy,
{
    let t_max = env.horizon();
    let nr = env.num_rewards();
    let mut states = Vec::with_capacity(t_max + 2);
    let mut actions = Vec::with_capacity(t_max + 1);
    let mut rewards = vec![vec![0.0; t_max + 1]; nr];
    let mut s = env.initial_state(rng);
    if !crate::linalg::all_finite(&s) {
        return Err(Error::NonFinite("initial state".into()));
    }
    states.push(s.clone());
    let mut log_prob = 0.0;
    let mut realized = t_max + 1;
    for t in 0..=t_max {
        let a = policy.sample(&s, rng)?;
        if !crate::linalg::all_finite(&a) {
            return Err(Error::NonFinite(format!("action at step {t}")));
        }
        log_prob += policy.log_prob(&s, &a)?;
        let tr = env.step(&s, &a, rng)?;
        if !crate::linalg::all_finite(&tr.next) {
            return Err(Error::NonFinite(format!("state at step {}", t + 1)));
        }
        for (j, r) in tr.rewards.iter().enumerate() {
            rewards[j][t] = *r;
        }
        actions.push(a);
        states.push(tr.next.clone());
        s = tr.next;
        if tr.terminated && t < t_max {
            realized = t + 1;
            break;
        }
    }
    let adim = env.action_dim();
    while actions.len() < t_max + 1 {
        actions.push(vec![0.0; adim]);
        states.push(s.clone());
    }
    Ok(Episode {
        states,
        actions,
        rewards,
        realized,
        behavior,
        behavior_log_prob: log_prob,
        index,
    })
}

/// Writes episodes as line-delimited JSON records.
pub fn write_episodes<W: Write>(mut w: W, episodes: &[Episode]) -> Result<()> {
    for ep in episodes {
        let line = serde_json::to_string(ep).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_episodes<R: BufRead>(r: R) -> Result<Vec<Episode>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ep: Episode = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("record {}: {e}", n + 1)))?;
        out.push(ep);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

/// Finite CMDP with explicit probabilities. States are encoded as the
/// one-element vector `[index]`; actions are the action vectors of the
/// accompanying [`DiscretizedPolicy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularCmdp {
    pub num_states: usize,
    pub actions: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// `transitions[s][a][s']`
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[j][s][a][s']`
    pub rewards: Vec<Vec<Vec<Vec<f64>>>>,
    pub horizon: usize,
    pub gamma: f64,
}

impl TabularCmdp {
    pub fn validate(&self) -> Result<()> {
        let ns = self.num_states;
        let na = self.actions.len();
        let close =
            |v: &[f64]| (v.iter().sum::<f64>() - 1.0).abs() < 1e-12 && v.iter().all(|p| *p >= 0.0);
        if self.initial.len() != ns || !close(&self.initial) {
            return Err(Error::InvalidArgument("initial distribution".into()));
        }
        if self.transitions.len() != ns
            || self
                .transitions
                .iter()
                .any(|row| row.len() != na || row.iter().any(|p| p.len() != ns || !close(p)))
        {
            return Err(Error::InvalidArgument("transition kernel".into()));
        }
        if self.rewards.is_empty()
            || self.rewards.iter().any(|rj| {
                rj.len() != ns
                    || rj
                        .iter()
                        .any(|ra| ra.len() != na || ra.iter().any(|r| r.len() != ns))
            })
        {
            return Err(Error::InvalidArgument("reward tables".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn action_index(&self, a: &[f64]) -> Result<usize> {
        self.actions
            .iter()
            .position(|x| x.as_slice() == a)
            .ok_or(Error::ActionOutsideBox)
    }

    fn state_index(s: &[f64]) -> usize {
        s[0] as usize
    }

    /// Number of trajectories an exhaustive enumeration visits.
    pub fn num_paths(&self) -> f64 {
        let t = self.horizon as f64;
        (self.num_states as f64).powf(t + 2.0) * (self.actions.len() as f64).powf(t + 1.0)
    }

    /// A small fixed CMDP used across the validation suite: two states on a
    /// line, two actions, a reward stream and one cost stream.
    pub fn two_state() -> Self {
        let actions = vec![vec![-1.0], vec![1.0]];
        // transitions[s][a][s']
        let transitions = vec![
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.6, 0.4], vec![0.1, 0.9]],
        ];
        let r0 = vec![
            vec![vec![0.2, 1.0], vec![0.0, 0.6]],
            vec![vec![0.9, 0.1], vec![0.5, 0.3]],
        ];
        // Mostly negative costs: the constraint is comfortably satisfied.
        let r1 = vec![
            vec![vec![-0.9, -0.4], vec![-0.7, 0.3]],
            vec![vec![-0.2, -0.8], vec![0.5, -1.0]],
        ];
        Self {
            num_states: 2,
            actions,
            initial: vec![0.6, 0.4],
            transitions,
            rewards: vec![r0, r1],
            horizon: 2,
            gamma: 0.9,
        }
    }

    /// Matching discretized policy: centers on the two state coordinates.
    pub fn matching_policy(&self) -> Result<DiscretizedPolicy> {
        let centers = (0..self.num_states).map(|s| vec![s as f64]).collect();
        let rbf = crate::policy::RbfMean::new(centers, 0.5, self.actions[0].len())?;
        DiscretizedPolicy::new(rbf, vec![0.5; self.actions[0].len()], self.actions.clone())
    }
}

impl Cmdp for TabularCmdp {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        self.actions[0].len()
    }

    fn num_rewards(&self) -> usize {
        self.rewards.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward_bounds(&self) -> Vec<f64> {
        self.rewards
            .iter()
            .map(|rj| {
                rj.iter()
                    .flatten()
                    .flatten()
                    .fold(0.0f64, |m, r| m.max(r.abs()))
            })
            .collect()
    }

    fn initial_state(&self, rng: &mut StreamRng) -> Vec<f64> {
        vec![sample_index(&self.initial, rng) as f64]
    }

    fn step(&self, s: &[f64], a: &[f64], rng: &mut StreamRng) -> Result<Transition> {
        let si = Self::state_index(s);
        let ai = self.action_index(a)?;
        let next = sample_index(&self.transitions[si][ai], rng);
        Ok(Transition {
            next: vec![next as f64],
            rewards: self.rewards.iter().map(|rj| rj[si][ai][next]).collect(),
            terminated: false,
        })
    }
}

fn sample_index(p: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Largest enumeration the oracles accept.
pub const ORACLE_PATH_BUDGET: f64 = 1e7;

/// Exact values and gradients for every reward stream.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `Vⱼ(θ)` with the sign convention applied.
    pub values: Vec<f64>,
    pub gradients: Vec<Vec<f64>>,
    /// Total probability mass enumerated (should be 1).
    pub total_probability: f64,
}

/// Enumerates every trajectory: `Vⱼ = σⱼ Σ_τ p(τ) Gⱼ(τ)` and
/// `∇Vⱼ = σⱼ Σ_τ p(τ) ∇log p_θ(τ) Gⱼ(τ)`.
pub fn oracle<P: Policy>(spec: &TabularCmdp, policy: &P) -> Result<OracleResult> {
    spec.validate()?;
    let paths = spec.num_paths();
    if paths > ORACLE_PATH_BUDGET {
        return Err(Error::EnumerationBudget {
            paths,
            budget: ORACLE_PATH_BUDGET,
        });
    }
    let nr = spec.rewards.len();
    let d = policy.num_params();
    // Per-(state, action) log-probabilities and scores are reused everywhere.
    let mut table = Vec::with_capacity(spec.num_states);
    for s in 0..spec.num_states {
        let mut row = Vec::with_capacity(spec.actions.len());
        for a in &spec.actions {
            row.push(policy.log_prob_and_grad(&[s as f64], a)?);
        }
        table.push(row);
    }
    let mut acc = OracleResult {
        values: vec![0.0; nr],
        gradients: vec![vec![0.0; d]; nr],
        total_probability: 0.0,
    };
    let mut score = vec![0.0; d];
    let mut ret = vec![0.0; nr];
    for s0 in 0..spec.num_states {
        let p0 = spec.initial[s0];
        if p0 == 0.0 {
            continue;
        }
        walk(spec, &table, s0, 0, p0, 1.0, &mut score, &mut ret, &mut acc);
    }
    for j in 0..nr {
        let sg = sign(j);
        acc.values[j] *= sg;
        for g in acc.gradients[j].iter_mut() {
            *g *= sg;
        }
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    spec: &TabularCmdp,
    table: &[Vec<(f64, Vec<f64>)>],
    s: usize,
    t: usize,
    prob: f64,
    disc: f64,
    score: &mut Vec<f64>,
    ret: &mut Vec<f64>,
    acc: &mut OracleResult,
) {
    for (ai, (lp, g)) in table[s].iter().enumerate() {
        let pa = prob * lp.exp();
        crate::linalg::axpy(1.0, g, score);
        for s1 in 0..spec.num_states {
            let p = pa * spec.transitions[s][ai][s1];
            if p == 0.0 {
                continue;
            }
            for j in 0..ret.len() {
                ret[j] += disc * spec.rewards[j][s][ai][s1];
            }
            if t == spec.horizon {
                acc.total_probability += p;
                for j in 0..ret.len() {
                    acc.values[j] += p * ret[j];
                    crate::linalg::axpy(p * ret[j], score, &mut acc.gradients[j]);
                }
            } else {
                walk(
                    spec,
                    table,
                    s1,
                    t + 1,
                    p,
                    disc * spec.gamma,
                    score,
                    ret,
                    acc,
                );
            }
            for j in 0..ret.len() {
                ret[j] -= disc * spec.rewards[j][s][ai][s1];
            }
        }
        crate::linalg::axpy(-1.0, g, score);
    }
}

pub fn oracle_value<P: Policy>(spec: &TabularCmdp, policy: &P, j: usize) -> Result<f64> {
    Ok(oracle(spec, policy)?.values[j])
}

pub fn oracle_gradient<P: Policy>(spec: &TabularCmdp, policy: &P, j: usize) -> Result<Vec<f64>> {
    Ok(oracle(spec, policy)?.gradients.swap_remove(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{episode_rng, stream, Purpose};

    fn one_state(r0: f64, r1: f64, gamma: f64, horizon: usize) -> TabularCmdp {
        TabularCmdp {
            num_states: 1,
            actions: vec![vec![-1.0], vec![1.0]],
            initial: vec![1.0],
            transitions: vec![vec![vec![1.0], vec![1.0]]],
            rewards: vec![
                vec![vec![vec![r0], vec![r0]]],
                vec![vec![vec![r1], vec![r1]]],
            ],
            horizon,
            gamma,
        }
    }

    fn policy_for(spec: &TabularCmdp) -> DiscretizedPolicy {
        spec.matching_policy().unwrap()
    }

    fn tag(theta: &[f64]) -> BehaviorTag {
        BehaviorTag {
            iteration: 0,
            theta: Arc::new(theta.to_vec()),
        }
    }

    #[test]
    fn constant_reward_rollout() {
        let spec = one_state(1.0, 0.0, 0.5, 2);
        let pol = policy_for(&spec);
        let ep = rollout(&spec, &pol, tag(pol.params()), 0, &mut episode_rng(1, 0, 0)).unwrap();
        assert_eq!(ep.rewards[0], vec![1.0, 1.0, 1.0]);
        assert_eq!(ep.rewards[1], vec![0.0, 0.0, 0.0]);
        assert_eq!(ep.states.len(), 4);
        assert_eq!(ep.actions.len(), 3);
        ep.check_shape(2).unwrap();
    }

    #[test]
    fn rollout_is_deterministic() {
        let spec = TabularCmdp::two_state();
        let mut pol = policy_for(&spec);
        pol.set_params(&[0.3, -0.7]).unwrap();
        let a = rollout(&spec, &pol, tag(pol.params()), 3, &mut episode_rng(9, 2, 3)).unwrap();
        let b = rollout(&spec, &pol, tag(pol.params()), 3, &mut episode_rng(9, 2, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_geometric_sum() {
        let spec = one_state(1.0, 0.0, 0.5, 2);
        let res = oracle(&spec, &policy_for(&spec)).unwrap();
        assert!((res.values[0] + 1.75).abs() < 1e-15);
        assert_eq!(res.values[1], 0.0);
        assert!((res.total_probability - 1.0).abs() < 1e-12);
        // Return is policy independent: zero gradient.
        assert!(res.gradients.iter().flatten().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn oracle_gradient_matches_finite_differences() {
        let spec = TabularCmdp::two_state();
        let mut pol = policy_for(&spec);
        let theta = [0.4, -0.9];
        pol.set_params(&theta).unwrap();
        let res = oracle(&spec, &pol).unwrap();
        let h = 1e-5;
        for j in 0..2 {
            for k in 0..2 {
                let mut tp = theta;
                tp[k] += h;
                let mut tm = theta;
                tm[k] -= h;
                let vp = oracle_value(&spec, &pol.with_params(&tp).unwrap(), j).unwrap();
                let vm = oracle_value(&spec, &pol.with_params(&tm).unwrap(), j).unwrap();
                let fd = (vp - vm) / (2.0 * h);
                assert!((fd - res.gradients[j][k]).abs() < 1e-6, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn symmetric_rewards_make_value_policy_independent() {
        // Both actions share reward laws and transitions.
        let mut spec = TabularCmdp::two_state();
        spec.transitions = vec![
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.3, 0.7], vec![0.3, 0.7]],
        ];
        for j in 0..2 {
            for s in 0..2 {
                let r = spec.rewards[j][s][0].clone();
                spec.rewards[j][s][1] = r;
            }
        }
        let pol = policy_for(&spec);
        let v0 = oracle_value(&spec, &pol.with_params(&[0.0, 0.0]).unwrap(), 1).unwrap();
        let v1 = oracle_value(&spec, &pol.with_params(&[2.0, -1.5]).unwrap(), 1).unwrap();
        assert!((v0 - v1).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let mut spec = TabularCmdp::two_state();
        spec.horizon = 30;
        assert!(matches!(
            oracle(&spec, &policy_for(&spec)),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn episode_records_round_trip() {
        let spec = TabularCmdp::two_state();
        let pol = policy_for(&spec);
        let eps: Vec<Episode> = (0..3)
            .map(|i| {
                rollout(
                    &spec,
                    &pol,
                    tag(pol.params()),
                    i,
                    &mut stream(5, Purpose::Rollout, 0, i as u64),
                )
                .unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_episodes(&mut buf, &eps).unwrap();
        let back = read_episodes(buf.as_slice()).unwrap();
        assert_eq!(eps, back);
        assert!(read_episodes("{not json}\n".as_bytes()).is_err());
    }
}
