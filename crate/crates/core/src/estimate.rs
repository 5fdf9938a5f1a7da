//! Trajectory-level importance-sampled estimates of value functions and
//! their gradients, plus the statistical constants that bound them.
//!
//! For a batch 𝒥 of episodes with behavior policies ζₙ and target θ:
//!
//! ```text
//! V̂ⱼ   = σⱼ/|𝒥| Σₙ wₙ Σₜ γᵗ Rⱼ,ₜ
//! ∇V̂ⱼ  = σⱼ/|𝒥| Σₙ wₙ Σₜ γᵗ ∇χ(aₜ, sₜ) Dⱼ,ₜ,   Dⱼ,ₜ = Σ_{t'≥t} γ^{t'−t} Rⱼ,t' − b(sₜ)
//! wₙ   = Πₜ π_θ(aₜ|sₜ)/ζₙ(aₜ|sₜ)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dist};
use crate::mdp::{sign, Episode};
use crate::policy::Policy;

/// Inclusive clamp applied to the whole-trajectory importance weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRange {
    pub lo: f64,
    pub hi: f64,
}

impl ClipRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!(
                "bad clip range [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }
}

/// Estimates at one iterate. Index `j = 0` is the objective stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    /// `V̂₀..V̂_q`.
    pub values: Vec<f64>,
    /// `∇V̂₀..∇V̂_q`.
    pub gradients: Vec<Vec<f64>>,
    pub batch_size: usize,
    pub on_policy_count: usize,
    pub off_policy_count: usize,
    pub clip: Option<ClipRange>,
}

impl EstimateBundle {
    pub fn from_parts(
        values: Vec<f64>,
        gradients: Vec<Vec<f64>>,
        batch_size: usize,
        on_policy_count: usize,
        off_policy_count: usize,
    ) -> Self {
        Self {
            values,
            gradients,
            batch_size,
            on_policy_count,
            off_policy_count,
            clip: None,
        }
    }

    /// `q`.
    pub fn num_constraints(&self) -> usize {
        self.gradients.len().saturating_sub(1)
    }
}

/// State-dependent offset subtracted from the reward-to-go.
pub trait Baseline: Sync {
    fn value(&self, j: usize, s: &[f64]) -> f64;
    /// Declared bound `B̂` on `|b(s)|`.
    fn bound(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroBaseline;

impl Baseline for ZeroBaseline {
    fn value(&self, _j: usize, _s: &[f64]) -> f64 {
        0.0
    }

    fn bound(&self) -> f64 {
        0.0
    }
}

/// `b(s) = cⱼ` per stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBaseline(pub Vec<f64>);

impl Baseline for ConstantBaseline {
    fn value(&self, j: usize, _s: &[f64]) -> f64 {
        self.0[j]
    }

    fn bound(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mean reward-to-go binned over a coarse grid of the state box. Refit from
/// each iteration's fresh episodes and used at the following iteration, so it
/// never depends on the batch it is applied to when replay is current-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedBaseline {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub bins: Vec<usize>,
    /// `table[j][cell]`
    pub table: Vec<Vec<f64>>,
    /// Largest absolute table entry seen so far.
    pub observed_max: f64,
}

impl BinnedBaseline {
    pub fn new(low: Vec<f64>, high: Vec<f64>, bins: Vec<usize>, num_rewards: usize) -> Self {
        let cells: usize = bins.iter().product();
        Self {
            low,
            high,
            bins,
            table: vec![vec![0.0; cells]; num_rewards],
            observed_max: 0.0,
        }
    }

    fn cell(&self, s: &[f64]) -> usize {
        let mut idx = 0;
        for (d, &n) in self.bins.iter().enumerate() {
            let span = self.high[d] - self.low[d];
            let x = ((s[d] - self.low[d]) / span * n as f64).floor();
            let k = (x.max(0.0) as usize).min(n - 1);
            idx = idx * n + k;
        }
        idx
    }

    /// Replaces the table with per-cell averages of `Dⱼ,ₜ` (with zero baseline)
    /// over the given episodes. Cells without data keep their old value.
    pub fn refit(&mut self, episodes: &[&Episode], gamma: f64) {
        let cells = self.table[0].len();
        let nr = self.table.len();
        let mut sum = vec![vec![0.0; cells]; nr];
        let mut cnt = vec![0usize; cells];
        for ep in episodes {
            for t in 0..ep.realized {
                let c = self.cell(&ep.states[t]);
                cnt[c] += 1;
            }
            for (j, sj) in sum.iter_mut().enumerate() {
                let togo = reward_to_go(&ep.rewards[j], gamma);
                for t in 0..ep.realized {
                    sj[self.cell(&ep.states[t])] += togo[t];
                }
            }
        }
        for j in 0..nr {
            for c in 0..cells {
                if cnt[c] > 0 {
                    self.table[j][c] = sum[j][c] / cnt[c] as f64;
                }
            }
        }
        self.observed_max = self
            .table
            .iter()
            .flatten()
            .fold(self.observed_max, |m, v| m.max(v.abs()));
    }
}

impl Baseline for BinnedBaseline {
    fn value(&self, j: usize, s: &[f64]) -> f64 {
        self.table[j][self.cell(s)]
    }

    fn bound(&self) -> f64 {
        self.observed_max
    }
}

/// `Σ_{t'≥t} γ^{t'−t} r_{t'}` for every `t`.
pub fn reward_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// `log wₙ` over realized steps. Zero exactly when the episode was generated
/// by the target parameters.
pub fn log_is_weight<P: Policy>(episode: &Episode, target: &P) -> Result<f64> {
    if episode.behavior.theta.as_slice() == target.params() {
        return Ok(0.0);
    }
    let mut lp = 0.0;
    for t in 0..episode.realized {
        lp += target.log_prob(&episode.states[t], &episode.actions[t])?;
    }
    Ok(lp - episode.behavior_log_prob)
}

/// Whole-trajectory importance weight, optionally clipped.
pub fn is_weight<P: Policy>(episode: &Episode, target: &P, clip: Option<ClipRange>) -> Result<f64> {
    let w = log_is_weight(episode, target)?.exp();
    if !w.is_finite() {
        return Err(Error::NonFiniteWeight);
    }
    Ok(match clip {
        Some(c) => w.clamp(c.lo, c.hi),
        None => w,
    })
}

/// Counts of episodes generated by the target parameters versus others.
pub fn split_counts<P: Policy>(batch: &[&Episode], target: &P) -> (usize, usize) {
    let on = batch
        .iter()
        .filter(|e| e.behavior.theta.as_slice() == target.params())
        .count();
    (on, batch.len() - on)
}

pub fn estimate_value<P: Policy>(
    j: usize,
    batch: &[&Episode],
    target: &P,
    gamma: f64,
    clip: Option<ClipRange>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let terms = crate::par::map_slice(batch, |ep| -> Result<f64> {
        Ok(is_weight(ep, target, clip)? * ep.discounted_return(j, gamma))
    });
    let mut acc = 0.0;
    for t in terms {
        acc += t?;
    }
    Ok(sign(j) * acc / batch.len() as f64)
}

pub fn estimate_gradient<P: Policy, B: Baseline + ?Sized>(
    j: usize,
    batch: &[&Episode],
    target: &P,
    gamma: f64,
    baseline: &B,
    clip: Option<ClipRange>,
) -> Result<Vec<f64>> {
    let bundle = estimate_streams(&[j], batch, target, gamma, baseline, clip)?;
    Ok(bundle.1.into_iter().next().expect("one stream"))
}

/// Values and gradients for all streams `0..q` in one pass over the batch.
pub fn estimate_all<P: Policy, B: Baseline + ?Sized>(
    batch: &[&Episode],
    target: &P,
    num_rewards: usize,
    gamma: f64,
    baseline: &B,
    clip: Option<ClipRange>,
) -> Result<EstimateBundle> {
    let streams: Vec<usize> = (0..num_rewards).collect();
    let (values, gradients) = estimate_streams(&streams, batch, target, gamma, baseline, clip)?;
    let (on, off) = split_counts(batch, target);
    Ok(EstimateBundle {
        values,
        gradients,
        batch_size: batch.len(),
        on_policy_count: on,
        off_policy_count: off,
        clip,
    })
}

struct EpisodeTerms {
    weight: f64,
    returns: Vec<f64>,
    grads: Vec<Vec<f64>>,
}

fn episode_terms<P: Policy, B: Baseline + ?Sized>(
    streams: &[usize],
    ep: &Episode,
    target: &P,
    gamma: f64,
    baseline: &B,
    clip: Option<ClipRange>,
) -> Result<EpisodeTerms> {
    let d = target.num_params();
    let bound = baseline.bound();
    let togo: Vec<Vec<f64>> = streams
        .iter()
        .map(|&j| reward_to_go(&ep.rewards[j], gamma))
        .collect();
    let mut grads = vec![vec![0.0; d]; streams.len()];
    let on_policy = ep.behavior.theta.as_slice() == target.params();
    let mut lp = 0.0;
    let mut disc = 1.0;
    for t in 0..ep.realized {
        let (l, score) = target.log_prob_and_grad(&ep.states[t], &ep.actions[t])?;
        lp += l;
        for (k, &j) in streams.iter().enumerate() {
            let b = baseline.value(j, &ep.states[t]);
            if b.abs() > bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::BaselineBound { value: b, bound });
            }
            axpy(disc * (togo[k][t] - b), &score, &mut grads[k]);
        }
        disc *= gamma;
    }
    let log_w = if on_policy {
        0.0
    } else {
        lp - ep.behavior_log_prob
    };
    let mut w = log_w.exp();
    if !w.is_finite() {
        return Err(Error::NonFiniteWeight);
    }
    if let Some(c) = clip {
        w = w.clamp(c.lo, c.hi);
    }
    let returns = streams
        .iter()
        .map(|&j| ep.discounted_return(j, gamma))
        .collect();
    Ok(EpisodeTerms {
        weight: w,
        returns,
        grads,
    })
}

fn estimate_streams<P: Policy, B: Baseline + ?Sized>(
    streams: &[usize],
    batch: &[&Episode],
    target: &P,
    gamma: f64,
    baseline: &B,
    clip: Option<ClipRange>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let d = target.num_params();
    let terms = crate::par::map_slice(batch, |ep| {
        episode_terms(streams, ep, target, gamma, baseline, clip)
    });
    // Ordered reduction: identical results for any thread count.
    let mut values = vec![0.0; streams.len()];
    let mut grads = vec![vec![0.0; d]; streams.len()];
    for term in terms {
        let term = term?;
        for k in 0..streams.len() {
            values[k] += term.weight * term.returns[k];
            axpy(term.weight, &term.grads[k], &mut grads[k]);
        }
    }
    let n = batch.len() as f64;
    for (k, &j) in streams.iter().enumerate() {
        let f = sign(j) / n;
        values[k] *= f;
        for g in grads[k].iter_mut() {
            *g *= f;
        }
    }
    Ok((values, grads))
}

// ---------------------------------------------------------------------------
// Statistical constants

/// `Σ_{t=0}^{n−1} γᵗ`.
pub fn geometric_sum(gamma: f64, n: usize) -> f64 {
    (1.0 - gamma.powi(n as i32)) / (1.0 - gamma)
}

/// `Σ_{t=0}^{T} t γᵗ = γ(1 − (T+1)γ^T + Tγ^{T+1})/(1−γ)²`.
pub fn weighted_geometric_sum(gamma: f64, horizon: usize) -> f64 {
    let t = horizon as f64;
    gamma * (1.0 - (t + 1.0) * gamma.powi(horizon as i32) + t * gamma.powi(horizon as i32 + 1))
        / ((1.0 - gamma) * (1.0 - gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatConstants {
    pub phi: f64,
    pub phi_bar: f64,
    pub psi: f64,
    pub psi_bar: f64,
    /// Per-episode `φ̃ₙ`, when parameter pairs were supplied.
    pub phi_tilde: Vec<f64>,
    pub psi_tilde: Vec<f64>,
}

/// Inputs to [`stat_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatInputs {
    pub b_j: f64,
    pub b_hat: f64,
    pub gamma: f64,
    pub horizon: usize,
    /// `log ν`; kept in log space because `ν^{T+1}` underflows quickly.
    pub log_nu: f64,
    pub b_tilde: f64,
}

/// Closed forms for `φⱼ, φ̄ⱼ, ψⱼ, ψ̄ⱼ` and, for each `(θ, θ̄ₙ)` pair with the
/// log-density Lipschitz constant `L̃`, the proximity-aware `φ̃ₙ, ψ̃ₙ`.
pub fn stat_constants(
    inp: &StatInputs,
    pairs: Option<(&[f64], &[&[f64]], f64)>,
) -> Result<StatConstants> {
    let StatInputs {
        b_j,
        b_hat,
        gamma,
        horizon,
        log_nu,
        b_tilde,
    } = *inp;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
    }
    if !(log_nu <= 0.0) {
        return Err(Error::InvalidArgument("nu must lie in (0, 1]".into()));
    }
    let t1 = (horizon + 1) as f64;
    let s = geometric_sum(gamma, horizon + 1);
    let phi = b_j * s;
    let inv_nu_pow = (-t1 * log_nu).exp();
    // Σₜ γᵗ Σ_{t'≥t} γ^{t'−t} = (S − (T+1)γ^{T+1})/(1−γ);  Σₜ γᵗ (T+1−t) = (T+1)S − Σ tγᵗ
    let inner_r = (s - t1 * gamma.powi(horizon as i32 + 1)) / (1.0 - gamma);
    let inner_b = t1 * s - weighted_geometric_sum(gamma, horizon);
    let psi = b_tilde * (b_j * inner_r + b_hat * inner_b);
    let (phi_tilde, psi_tilde) = match pairs {
        Some((theta, behaviors, l_tilde)) => behaviors
            .iter()
            .map(|tb| {
                let f = (t1 * l_tilde * dist(theta, tb)).exp();
                (phi * f, psi * f)
            })
            .unzip(),
        None => (Vec::new(), Vec::new()),
    };
    Ok(StatConstants {
        phi,
        phi_bar: phi * inv_nu_pow,
        psi,
        psi_bar: psi * inv_nu_pow,
        phi_tilde,
        psi_tilde,
    })
}

/// `1 − 2 exp(−ε²J²/(2N̄φ² + 2Ñφ̄²))`, clamped to `[0, 1]`.
pub fn tail_bound_value(epsilon: f64, n_bar: usize, n_tilde: usize, phi: f64, phi_bar: f64) -> f64 {
    let j = (n_bar + n_tilde) as f64;
    let denom = 2.0 * n_bar as f64 * phi * phi + 2.0 * n_tilde as f64 * phi_bar * phi_bar;
    (1.0 - 2.0 * (-epsilon * epsilon * j * j / denom).exp()).clamp(0.0, 1.0)
}

/// `1 − 2d exp(−ε²J²/(2d(N̄ψ² + Ñψ̄²)))`, clamped to `[0, 1]`.
pub fn tail_bound_gradient(
    epsilon: f64,
    n_bar: usize,
    n_tilde: usize,
    psi: f64,
    psi_bar: f64,
    dim: usize,
) -> f64 {
    let j = (n_bar + n_tilde) as f64;
    let d = dim as f64;
    let denom = 2.0 * d * (n_bar as f64 * psi * psi + n_tilde as f64 * psi_bar * psi_bar);
    (1.0 - 2.0 * d * (-epsilon * epsilon * j * j / denom).exp()).clamp(0.0, 1.0)
}

/// Proximity-aware variant: `1 − 2 exp(−ε²J²/(2Σₙ φ̃ₙ²))`.
pub fn tail_bound_value_tilde(epsilon: f64, phi_tilde: &[f64]) -> f64 {
    let j = phi_tilde.len() as f64;
    let s: f64 = phi_tilde.iter().map(|p| p * p).sum();
    (1.0 - 2.0 * (-epsilon * epsilon * j * j / (2.0 * s)).exp()).clamp(0.0, 1.0)
}

/// Uniform bound `(N̄c + Ñc̄)/J` on `|V̂ⱼ|` (with `φ`) or `|∇V̂ⱼ⁽ˡ⁾|` (with `ψ`).
pub fn uniform_bound(n_bar: usize, n_tilde: usize, c: f64, c_bar: f64) -> f64 {
    (n_bar as f64 * c + n_tilde as f64 * c_bar) / (n_bar + n_tilde) as f64
}

/// Variance bound `(N̄c² + Ñc̄²)/J²`.
pub fn variance_bound(n_bar: usize, n_tilde: usize, c: f64, c_bar: f64) -> f64 {
    let j = (n_bar + n_tilde) as f64;
    (n_bar as f64 * c * c + n_tilde as f64 * c_bar * c_bar) / (j * j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{rollout, BehaviorTag, TabularCmdp};
    use crate::rng::episode_rng;
    use std::sync::Arc;

    fn geometric_loop(gamma: f64, n: usize) -> f64 {
        (0..n).map(|t| gamma.powi(t as i32)).sum()
    }

    #[test]
    fn phi_and_phi_bar_worked_values() {
        let inp = StatInputs {
            b_j: 1.0,
            b_hat: 0.0,
            gamma: 0.5,
            horizon: 2,
            log_nu: 0.5f64.ln(),
            b_tilde: 1.0,
        };
        let c = stat_constants(&inp, None).unwrap();
        assert!((c.phi - 1.75).abs() < 1e-12);
        assert!((c.phi_bar - 14.0).abs() < 1e-9);
        assert!((c.phi - geometric_loop(0.5, 3)).abs() < 1e-15);
    }

    #[test]
    fn psi_matches_double_loop() {
        let cases: [(f64, usize, f64, f64, f64); 3] = [
            (0.5, 2, 1.0, 0.0, 1.0),
            (0.9, 7, 2.0, 0.3, 1.5),
            (0.98, 50, 1.0, 1.0, 2.0),
        ];
        for &(g, t, bj, bh, bt) in &cases {
            let mut looped = 0.0;
            for s in 0..=t {
                let mut inner = 0.0;
                for s2 in s..=t {
                    inner += g.powi((s2 - s) as i32) * bj + bh;
                }
                looped += g.powi(s as i32) * inner;
            }
            looped *= bt;
            let inp = StatInputs {
                b_j: bj,
                b_hat: bh,
                gamma: g,
                horizon: t,
                log_nu: 0.0,
                b_tilde: bt,
            };
            let c = stat_constants(&inp, None).unwrap();
            assert!(
                (c.psi - looped).abs() <= 1e-12 * looped.max(1.0),
                "{} vs {}",
                c.psi,
                looped
            );
            assert_eq!(c.psi, c.psi_bar);
        }
    }

    #[test]
    fn tilde_constants_collapse_on_policy() {
        let inp = StatInputs {
            b_j: 1.0,
            b_hat: 0.0,
            gamma: 0.5,
            horizon: 2,
            log_nu: 0.5f64.ln(),
            b_tilde: 1.0,
        };
        let th = [0.2, 0.3];
        let c = stat_constants(&inp, Some((&th, &[&th[..]], 3.0))).unwrap();
        assert_eq!(c.phi_tilde, vec![c.phi]);
        assert_eq!(c.psi_tilde, vec![c.psi]);
    }

    #[test]
    fn tail_bound_worked_values() {
        let b = tail_bound_value(0.5, 100, 0, 1.75, 14.0);
        let expect = 1.0 - 2.0 * (-2500.0f64 / 612.5).exp();
        assert!((b - expect).abs() < 1e-15);
        assert!((b - 0.9663).abs() < 1e-4);
        assert_eq!(tail_bound_value(1e-6, 100, 0, 1.75, 14.0), 0.0);
        assert_eq!(tail_bound_gradient(1e-6, 100, 0, 1.75, 14.0, 3), 0.0);
    }

    #[test]
    fn value_estimate_simple_chain() {
        // One on-policy episode, γ = 0.5, T = 1, Rⱼ ≡ 1 → 1.5
        let spec = TabularCmdp {
            num_states: 1,
            actions: vec![vec![-1.0], vec![1.0]],
            initial: vec![1.0],
            transitions: vec![vec![vec![1.0], vec![1.0]]],
            rewards: vec![
                vec![vec![vec![0.0], vec![0.0]]],
                vec![vec![vec![1.0], vec![1.0]]],
            ],
            horizon: 1,
            gamma: 0.5,
        };
        let pol = spec.matching_policy().unwrap();
        let tag = BehaviorTag {
            iteration: 0,
            theta: Arc::new(pol.params().to_vec()),
        };
        let ep = rollout(&spec, &pol, tag, 0, &mut episode_rng(0, 0, 0)).unwrap();
        assert_eq!(estimate_value(1, &[&ep], &pol, 0.5, None).unwrap(), 1.5);
        assert_eq!(estimate_value(0, &[&ep], &pol, 0.5, None).unwrap(), 0.0);
        assert_eq!(is_weight(&ep, &pol, None).unwrap(), 1.0);
        let g = estimate_gradient(0, &[&ep], &pol, 0.5, &ZeroBaseline, None).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        assert_eq!(
            estimate_value(1, &[], &pol, 0.5, None),
            Err(Error::EmptyBatch)
        );
    }

    #[test]
    fn clip_clamps_weight() {
        let spec = TabularCmdp::two_state();
        let behavior = spec.matching_policy().unwrap();
        let tag = BehaviorTag {
            iteration: 0,
            theta: Arc::new(behavior.params().to_vec()),
        };
        let target = behavior.with_params(&[3.0, 3.0]).unwrap();
        let clip = Some(ClipRange::new(0.8, 1.2).unwrap());
        for i in 0..50 {
            let ep = rollout(
                &spec,
                &behavior,
                tag.clone(),
                i,
                &mut episode_rng(3, 0, i as u64),
            )
            .unwrap();
            let raw = is_weight(&ep, &target, None).unwrap();
            let w = is_weight(&ep, &target, clip).unwrap();
            assert_eq!(w, raw.clamp(0.8, 1.2));
        }
    }

    #[test]
    fn baseline_bound_is_enforced() {
        struct Lying;
        impl Baseline for Lying {
            fn value(&self, _j: usize, _s: &[f64]) -> f64 {
                2.0
            }
            fn bound(&self) -> f64 {
                1.0
            }
        }
        let spec = TabularCmdp::two_state();
        let pol = spec.matching_policy().unwrap();
        let tag = BehaviorTag {
            iteration: 0,
            theta: Arc::new(pol.params().to_vec()),
        };
        let ep = rollout(&spec, &pol, tag, 0, &mut episode_rng(0, 0, 0)).unwrap();
        assert!(matches!(
            estimate_gradient(1, &[&ep], &pol, 0.9, &Lying, None),
            Err(Error::BaselineBound { .. })
        ));
    }

    #[test]
    fn reward_to_go_small() {
        assert_eq!(reward_to_go(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
    }

    #[test]
    fn binned_baseline_refit_averages() {
        let spec = TabularCmdp::two_state();
        let pol = spec.matching_policy().unwrap();
        let tag = BehaviorTag {
            iteration: 0,
            theta: Arc::new(pol.params().to_vec()),
        };
        let eps: Vec<_> = (0..20)
            .map(|i| {
                rollout(
                    &spec,
                    &pol,
                    tag.clone(),
                    i,
                    &mut episode_rng(1, 0, i as u64),
                )
                .unwrap()
            })
            .collect();
        let refs: Vec<&Episode> = eps.iter().collect();
        let mut b = BinnedBaseline::new(vec![-0.5], vec![1.5], vec![2], 2);
        b.refit(&refs, 0.9);
        assert!(b.bound() > 0.0);
        for j in 0..2 {
            for s in [[0.0], [1.0]] {
                assert!(b.value(j, &s).abs() <= b.bound());
            }
        }
    }
}
