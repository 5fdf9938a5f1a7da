//! Gaussian policies whose mean is a sum of RBF kernels weighted by `tanh(θ)`.
//!
//! The continuous policy is a diagonal Gaussian truncated (renormalized) to a
//! compact action box, which gives a strictly positive density floor. The
//! discretized variant evaluates the same Gaussian log-density on a finite
//! action set and normalizes over it; it backs the tabular oracles so that
//! they exercise the production mean and score code.

use std::f64::consts::{LN_2, PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Conservative constants describing how smooth `θ ↦ log π_θ(a|s)` is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    /// Lipschitz constant of the score `∇χ`.
    pub l: f64,
    /// Bound on every score component `|∇χ⁽ˡ⁾|`.
    pub b_tilde: f64,
    /// Lipschitz constant of the log-density `χ` itself.
    pub l_tilde: f64,
}

/// Parametric stochastic policy `π_θ(a|s)`.
pub trait Policy: Send + Sync + Clone {
    fn num_params(&self) -> usize;
    fn params(&self) -> &[f64];
    fn set_params(&mut self, theta: &[f64]) -> Result<()>;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;

    /// `χ_{a,s}(θ) = log π_θ(a|s)`.
    fn log_prob(&self, s: &[f64], a: &[f64]) -> Result<f64>;

    /// `(χ, ∇χ)` sharing the kernel evaluation.
    fn log_prob_and_grad(&self, s: &[f64], a: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn grad_log_prob(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.log_prob_and_grad(s, a).map(|(_, g)| g)
    }

    fn sample(&self, s: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>>;

    fn lipschitz_bounds(&self) -> LipschitzBounds;

    /// `log ν` where `π_θ(a|s) ≥ ν` for all `θ, s, a`.
    fn log_nu(&self) -> f64;

    fn with_params(&self, theta: &[f64]) -> Result<Self> {
        let mut p = self.clone();
        p.set_params(theta)?;
        Ok(p)
    }
}

/// RBF kernel mean `μ_θ(s) = Σᵢ tanh(θᵢ) exp(−‖s − cᵢ‖²/(2σ²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfMean {
    pub centers: Vec<Vec<f64>>,
    pub rbf_variance: f64,
    pub action_dim: usize,
}

impl RbfMean {
    pub fn new(centers: Vec<Vec<f64>>, rbf_variance: f64, action_dim: usize) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one RBF center required".into(),
            ));
        }
        let sd = centers[0].len();
        if centers.iter().any(|c| c.len() != sd) {
            return Err(Error::InvalidArgument(
                "RBF centers of mixed dimension".into(),
            ));
        }
        if !(rbf_variance > 0.0) {
            return Err(Error::InvalidArgument(
                "rbf variance must be positive".into(),
            ));
        }
        if action_dim == 0 {
            return Err(Error::InvalidArgument(
                "action dimension must be positive".into(),
            ));
        }
        Ok(Self {
            centers,
            rbf_variance,
            action_dim,
        })
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn state_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn num_params(&self) -> usize {
        self.centers.len() * self.action_dim
    }

    pub fn kernels(&self, s: &[f64]) -> Vec<f64> {
        let inv = 1.0 / (2.0 * self.rbf_variance);
        self.centers
            .iter()
            .map(|c| {
                let d2: f64 = c.iter().zip(s).map(|(ci, si)| (si - ci) * (si - ci)).sum();
                (-d2 * inv).exp()
            })
            .collect()
    }

    /// Mean given precomputed kernels. `theta[i * action_dim + l]`.
    pub fn mean_with(&self, theta: &[f64], kernels: &[f64]) -> Vec<f64> {
        let k = self.action_dim;
        let mut mu = vec![0.0; k];
        for (i, ki) in kernels.iter().enumerate() {
            for l in 0..k {
                mu[l] += theta[i * k + l].tanh() * ki;
            }
        }
        mu
    }

    pub fn mean(&self, theta: &[f64], s: &[f64]) -> Vec<f64> {
        self.mean_with(theta, &self.kernels(s))
    }

    /// Chain rule from `∂χ/∂μ` to `∂χ/∂θ`.
    fn pullback(&self, theta: &[f64], kernels: &[f64], dmu: &[f64]) -> Vec<f64> {
        let k = self.action_dim;
        let mut g = vec![0.0; theta.len()];
        for (i, ki) in kernels.iter().enumerate() {
            for l in 0..k {
                let t = theta[i * k + l].tanh();
                g[i * k + l] = ki * (1.0 - t * t) * dmu[l];
            }
        }
        g
    }
}

/// Centers on an evenly spaced grid over a box, `counts[i]` points per axis
/// (endpoints included; a single point sits at the midpoint).
pub fn grid_centers(low: &[f64], high: &[f64], counts: &[usize]) -> Vec<Vec<f64>> {
    assert_eq!(low.len(), high.len());
    assert_eq!(low.len(), counts.len());
    let axes: Vec<Vec<f64>> = (0..low.len())
        .map(|i| {
            let n = counts[i].max(1);
            if n == 1 {
                vec![0.5 * (low[i] + high[i])]
            } else {
                (0..n)
                    .map(|k| low[i] + (high[i] - low[i]) * k as f64 / (n - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Standard normal helpers

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln erfc(x)`, accurate deep into the upper tail.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 25.0 {
        libm::erfc(x).ln()
    } else {
        // Asymptotic series: erfc(x) ≈ e^{−x²}/(x√π) (1 − 1/(2x²) + 3/(4x⁴) − 15/(8x⁶))
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        -x2 - (x * PI.sqrt()).ln() + series.ln()
    }
}

/// `ln(Φ(b) − Φ(a))` for `a < b`.
pub fn ln_normal_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    if a >= 0.0 {
        // Both in the upper tail: ½erfc(a/√2) − ½erfc(b/√2).
        let la = ln_erfc(a / SQRT_2);
        let lb = ln_erfc(b / SQRT_2);
        la - LN_2 + (-(lb - la).exp()).ln_1p()
    } else if b <= 0.0 {
        ln_normal_mass(-b, -a)
    } else {
        let upper = 0.5 * libm::erfc(b / SQRT_2);
        let lower = 0.5 * libm::erfc(-a / SQRT_2);
        (1.0 - upper - lower).ln()
    }
}

fn ln_std_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// One-dimensional truncated normal on `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub low: f64,
    pub high: f64,
}

impl TruncatedNormal {
    fn standardized(&self) -> (f64, f64) {
        (
            (self.low - self.mean) / self.sd,
            (self.high - self.mean) / self.sd,
        )
    }

    pub fn ln_mass(&self) -> f64 {
        let (a, b) = self.standardized();
        ln_normal_mass(a, b)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        ln_std_pdf((x - self.mean) / self.sd) - self.sd.ln() - self.ln_mass()
    }

    /// `∂ ln Z/∂μ = (φ(α) − φ(β))/(σ Z)`, i.e. `(E[X] − μ)/σ²`.
    pub fn d_ln_mass_d_mean(&self) -> f64 {
        let (a, b) = self.standardized();
        let lz = ln_normal_mass(a, b);
        ((ln_std_pdf(a) - lz).exp() - (ln_std_pdf(b) - lz).exp()) / self.sd
    }

    pub fn expectation(&self) -> f64 {
        self.mean + self.sd * self.sd * self.d_ln_mass_d_mean()
    }

    pub fn variance(&self) -> f64 {
        let (a, b) = self.standardized();
        let lz = ln_normal_mass(a, b);
        let pa = (ln_std_pdf(a) - lz).exp();
        let pb = (ln_std_pdf(b) - lz).exp();
        // Products a·φ(a) are zero for infinite endpoints.
        let ta = if a.is_finite() { a * pa } else { 0.0 };
        let tb = if b.is_finite() { b * pb } else { 0.0 };
        let r = pa - pb;
        self.sd * self.sd * (1.0 + ta - tb - r * r)
    }

    /// Rejection sampler. Naive proposals when the box holds enough mass,
    /// exponential or uniform proposals otherwise.
    pub fn sample(&self, rng: &mut StreamRng, budget: usize) -> Result<f64> {
        let (a, b) = self.standardized();
        let z = sample_std_truncated(a, b, rng, budget)?;
        Ok((self.mean + self.sd * z).clamp(self.low, self.high))
    }
}

fn sample_std_truncated(a: f64, b: f64, rng: &mut StreamRng, budget: usize) -> Result<f64> {
    let mass = ln_normal_mass(a, b).exp();
    if mass >= 0.2 {
        for _ in 0..budget {
            let z: f64 = StandardNormal.sample(rng);
            if z >= a && z <= b {
                return Ok(z);
            }
        }
        return Err(Error::RejectionBudget(budget));
    }
    if b <= 0.0 {
        return sample_std_truncated(-b, -a, rng, budget).map(|z| -z);
    }
    if a >= 0.0 && b - a > 1.0 {
        // Exponential proposal shifted to a.
        let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
        let exp = Exp::new(lambda).expect("positive rate");
        for _ in 0..budget {
            let z = a + exp.sample(rng);
            if z > b {
                continue;
            }
            let u: f64 = rng.gen();
            if u <= (-(z - lambda) * (z - lambda) / 2.0).exp() {
                return Ok(z);
            }
        }
        return Err(Error::RejectionBudget(budget));
    }
    // Narrow interval: uniform proposal, acceptance relative to the mode on [a, b].
    let peak = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    for _ in 0..budget {
        let z = a + (b - a) * rng.gen::<f64>();
        let u: f64 = rng.gen();
        if u <= ((peak * peak - z * z) / 2.0).exp() {
            return Ok(z);
        }
    }
    Err(Error::RejectionBudget(budget))
}

/// Draw limit for the rejection samplers.
pub const REJECTION_BUDGET: usize = 10_000;

// ---------------------------------------------------------------------------

/// Axis-aligned action box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBox {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionBox {
    pub fn symmetric(half_width: f64, dim: usize) -> Self {
        Self {
            low: vec![-half_width; dim],
            high: vec![half_width; dim],
        }
    }

    pub fn width(&self, l: usize) -> f64 {
        self.high[l] - self.low[l]
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.len() == self.low.len()
            && a.iter()
                .enumerate()
                .all(|(l, v)| *v >= self.low[l] && *v <= self.high[l])
    }
}

/// `4/(3√3)`: the maximum of `|d/dx sech²(x)|`.
const SECH2_SLOPE_MAX: f64 = 0.769_800_358_919_501;

/// Bounds shared by both policy flavours. `widths` are the spreads of the
/// action coordinates, `variances` the diagonal of Σ.
fn score_bounds(num_centers: usize, widths: &[f64], variances: &[f64]) -> LipschitzBounds {
    // Score component: kᵢ sech²(θᵢₗ) (aₗ − E[aₗ])/Σₗ, and |aₗ − E[aₗ]| ≤ widthₗ.
    let b_tilde = widths
        .iter()
        .zip(variances)
        .map(|(w, v)| w / v)
        .fold(0.0, f64::max);
    // Hessian = diag(gₗ kᵢ (sech²)'(θᵢₗ)) + (vvᵀ) ⊗ C with ‖v‖² ≤ N_c and
    // ‖C‖ ≤ Σₗ Var(aₗ)/Σ_min², Var(aₗ) ≤ widthₗ²/4 (Popoviciu).
    let var_min = variances.iter().cloned().fold(f64::INFINITY, f64::min);
    let cov_norm: f64 = widths.iter().map(|w| w * w / 4.0).sum::<f64>() / (var_min * var_min);
    let l = SECH2_SLOPE_MAX * b_tilde + num_centers as f64 * cov_norm;
    let grad_sq: f64 = widths
        .iter()
        .zip(variances)
        .map(|(w, v)| (w / v) * (w / v))
        .sum();
    LipschitzBounds {
        l,
        b_tilde,
        l_tilde: (num_centers as f64 * grad_sq).sqrt(),
    }
}

/// Gaussian policy with RBF mean, diagonal covariance, truncated to a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfGaussianPolicy {
    pub rbf: RbfMean,
    pub theta: Vec<f64>,
    /// Diagonal of Σ.
    pub action_var: Vec<f64>,
    pub action_box: ActionBox,
}

impl RbfGaussianPolicy {
    pub fn new(rbf: RbfMean, action_var: Vec<f64>, action_box: ActionBox) -> Result<Self> {
        let k = rbf.action_dim;
        if action_var.len() != k || action_box.low.len() != k || action_box.high.len() != k {
            return Err(Error::Dimension {
                what: "action covariance/box",
                expected: k,
                got: action_var.len(),
            });
        }
        if action_var.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(
                "action variances must be positive".into(),
            ));
        }
        if (0..k).any(|l| !(action_box.high[l] > action_box.low[l])) {
            return Err(Error::InvalidArgument("empty action box".into()));
        }
        let theta = vec![0.0; rbf.num_params()];
        Ok(Self {
            rbf,
            theta,
            action_var,
            action_box,
        })
    }

    pub fn mean(&self, s: &[f64]) -> Vec<f64> {
        self.rbf.mean(&self.theta, s)
    }

    fn marginals(&self, mu: &[f64]) -> Vec<TruncatedNormal> {
        mu.iter()
            .enumerate()
            .map(|(l, m)| TruncatedNormal {
                mean: *m,
                sd: self.action_var[l].sqrt(),
                low: self.action_box.low[l],
                high: self.action_box.high[l],
            })
            .collect()
    }

    /// Bound on `|μ_θ(s)⁽ˡ⁾|` (each kernel ≤ 1, `|tanh| ≤ 1`).
    pub fn mean_bound(&self) -> f64 {
        self.rbf.num_centers() as f64
    }

    fn log_density(&self, mu: &[f64], a: &[f64]) -> f64 {
        self.marginals(mu)
            .iter()
            .zip(a)
            .map(|(tn, x)| tn.ln_pdf(*x))
            .sum()
    }
}

impl Policy for RbfGaussianPolicy {
    fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::Dimension {
                what: "policy parameters",
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    fn state_dim(&self) -> usize {
        self.rbf.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.rbf.action_dim
    }

    fn log_prob(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        if !self.action_box.contains(a) {
            return Err(Error::ActionOutsideBox);
        }
        Ok(self.log_density(&self.mean(s), a))
    }

    fn log_prob_and_grad(&self, s: &[f64], a: &[f64]) -> Result<(f64, Vec<f64>)> {
        if !self.action_box.contains(a) {
            return Err(Error::ActionOutsideBox);
        }
        let kern = self.rbf.kernels(s);
        let mu = self.rbf.mean_with(&self.theta, &kern);
        let margs = self.marginals(&mu);
        let mut lp = 0.0;
        let dmu: Vec<f64> = margs
            .iter()
            .zip(a)
            .enumerate()
            .map(|(l, (tn, x))| {
                lp += tn.ln_pdf(*x);
                (x - mu[l]) / self.action_var[l] - tn.d_ln_mass_d_mean()
            })
            .collect();
        Ok((lp, self.rbf.pullback(&self.theta, &kern, &dmu)))
    }

    fn sample(&self, s: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let mu = self.mean(s);
        self.marginals(&mu)
            .iter()
            .map(|tn| tn.sample(rng, REJECTION_BUDGET))
            .collect()
    }

    fn lipschitz_bounds(&self) -> LipschitzBounds {
        let k = self.action_dim();
        let widths: Vec<f64> = (0..k).map(|l| self.action_box.width(l)).collect();
        score_bounds(self.rbf.num_centers(), &widths, &self.action_var)
    }

    /// Minimum over the box and over `|μ| ≤ mean_bound()` of the density.
    /// The density is unimodal in `a`, so the minimum sits at a box endpoint;
    /// the mean is scanned on a fine grid including its endpoints.
    fn log_nu(&self) -> f64 {
        let m = self.mean_bound();
        let mut total = 0.0;
        for l in 0..self.action_dim() {
            let sd = self.action_var[l].sqrt();
            let (lo, hi) = (self.action_box.low[l], self.action_box.high[l]);
            let n = 2001;
            let mut worst = f64::INFINITY;
            for i in 0..n {
                let mu = -m + 2.0 * m * i as f64 / (n - 1) as f64;
                let tn = TruncatedNormal {
                    mean: mu,
                    sd,
                    low: lo,
                    high: hi,
                };
                worst = worst.min(tn.ln_pdf(lo)).min(tn.ln_pdf(hi));
            }
            total += worst;
        }
        total
    }
}

/// The same Gaussian log-density restricted to a finite action set:
/// `π(aₖ|s) ∝ exp(−Σₗ (aₖₗ − μₗ(s))²/(2Σₗ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPolicy {
    pub rbf: RbfMean,
    pub theta: Vec<f64>,
    pub action_var: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
}

impl DiscretizedPolicy {
    pub fn new(rbf: RbfMean, action_var: Vec<f64>, actions: Vec<Vec<f64>>) -> Result<Self> {
        let k = rbf.action_dim;
        if action_var.len() != k || actions.iter().any(|a| a.len() != k) {
            return Err(Error::Dimension {
                what: "discrete action set",
                expected: k,
                got: action_var.len(),
            });
        }
        if actions.len() < 2 {
            return Err(Error::InvalidArgument("need at least two actions".into()));
        }
        let theta = vec![0.0; rbf.num_params()];
        Ok(Self {
            rbf,
            theta,
            action_var,
            actions,
        })
    }

    pub fn action_index(&self, a: &[f64]) -> Option<usize> {
        self.actions.iter().position(|x| x.as_slice() == a)
    }

    fn logits(&self, mu: &[f64]) -> Vec<f64> {
        self.actions
            .iter()
            .map(|a| {
                -a.iter()
                    .zip(mu)
                    .zip(&self.action_var)
                    .map(|((x, m), v)| (x - m) * (x - m) / (2.0 * v))
                    .sum::<f64>()
            })
            .collect()
    }

    /// Action probabilities at `s`.
    pub fn probabilities(&self, s: &[f64]) -> Vec<f64> {
        let lg = self.logits(&self.rbf.mean(&self.theta, s));
        let mx = lg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = lg.iter().map(|v| (v - mx).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|v| v / z).collect()
    }

    fn widths(&self) -> Vec<f64> {
        (0..self.rbf.action_dim)
            .map(|l| {
                let (lo, hi) = self
                    .actions
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, a| {
                        (acc.0.min(a[l]), acc.1.max(a[l]))
                    });
                hi - lo
            })
            .collect()
    }
}

impl Policy for DiscretizedPolicy {
    fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::Dimension {
                what: "policy parameters",
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    fn state_dim(&self) -> usize {
        self.rbf.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.rbf.action_dim
    }

    fn log_prob(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        let k = self.action_index(a).ok_or(Error::ActionOutsideBox)?;
        Ok(self.probabilities(s)[k].ln())
    }

    fn log_prob_and_grad(&self, s: &[f64], a: &[f64]) -> Result<(f64, Vec<f64>)> {
        let k = self.action_index(a).ok_or(Error::ActionOutsideBox)?;
        let kern = self.rbf.kernels(s);
        let mu = self.rbf.mean_with(&self.theta, &kern);
        let lg = self.logits(&mu);
        let mx = lg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + lg.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
        let probs: Vec<f64> = lg.iter().map(|v| (v - lse).exp()).collect();
        // ∂χ/∂μₗ = (aₖₗ − E_π[aₗ])/Σₗ
        let dmu: Vec<f64> = (0..self.rbf.action_dim)
            .map(|l| {
                let ebar: f64 = self.actions.iter().zip(&probs).map(|(x, p)| p * x[l]).sum();
                (self.actions[k][l] - ebar) / self.action_var[l]
            })
            .collect();
        Ok((lg[k] - lse, self.rbf.pullback(&self.theta, &kern, &dmu)))
    }

    fn sample(&self, s: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let probs = self.probabilities(s);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(self.actions[k].clone());
            }
        }
        Ok(self.actions[probs.len() - 1].clone())
    }

    fn lipschitz_bounds(&self) -> LipschitzBounds {
        score_bounds(self.rbf.num_centers(), &self.widths(), &self.action_var)
    }

    /// Softmax floor with every logit gap at its worst: `|μ| ≤ N_c`.
    fn log_nu(&self) -> f64 {
        let m = self.rbf.num_centers() as f64;
        // Worst gap between two logits over |μₗ| ≤ m.
        let mut gap = 0.0;
        for l in 0..self.rbf.action_dim {
            let (lo, hi) = self
                .actions
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, a| {
                    (acc.0.min(a[l]), acc.1.max(a[l]))
                });
            let far = (hi + m).max(m - lo);
            gap += far * far / (2.0 * self.action_var[l]);
        }
        -(gap + (self.actions.len() as f64).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn nav_like(n: usize) -> RbfGaussianPolicy {
        let rbf = RbfMean::new(grid_centers(&[0.0, 0.0], &[10.0, 10.0], &[n, n]), 0.5, 2).unwrap();
        RbfGaussianPolicy::new(rbf, vec![0.5, 0.5], ActionBox::symmetric(5.0, 2)).unwrap()
    }

    #[test]
    fn zero_theta_gives_zero_mean() {
        let p = nav_like(4);
        assert_eq!(p.mean(&[3.0, 7.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn mean_at_center_is_tanh_theta() {
        let rbf = RbfMean::new(vec![vec![1.0, 2.0]], 0.5, 2).unwrap();
        let mut p =
            RbfGaussianPolicy::new(rbf, vec![0.5, 0.5], ActionBox::symmetric(5.0, 2)).unwrap();
        p.set_params(&[50.0, -0.3]).unwrap();
        let mu = p.mean(&[1.0, 2.0]);
        assert!((mu[0] - 1.0).abs() < 1e-15);
        assert!((mu[1] - (-0.3f64).tanh()).abs() < 1e-15);
    }

    #[test]
    fn far_states_have_negligible_mean() {
        let rbf = RbfMean::new(vec![vec![0.0, 0.0]], 0.5, 1).unwrap();
        let mut p = RbfGaussianPolicy::new(rbf, vec![0.5], ActionBox::symmetric(5.0, 1)).unwrap();
        p.set_params(&[3.0]).unwrap();
        // ‖s − c‖² = 40, 2σ² = 1 → e^{−40}
        assert!(p.mean(&[6.0, 2.0])[0].abs() <= (-20.0f64).exp());
    }

    #[test]
    fn symmetric_box_at_mean_has_zero_score() {
        let p = nav_like(3);
        let s = [5.0, 5.0];
        let a = p.mean(&s);
        let g = p.grad_log_prob(&s, &a).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn action_outside_box_is_rejected() {
        let p = nav_like(2);
        assert_eq!(
            p.log_prob(&[1.0, 1.0], &[6.0, 0.0]),
            Err(Error::ActionOutsideBox)
        );
    }

    #[test]
    fn ln_normal_mass_matches_erf_in_the_bulk_and_tail() {
        let direct = |a: f64, b: f64| 0.5 * (libm::erf(b / SQRT_2) - libm::erf(a / SQRT_2));
        for (a, b) in [(-1.0, 1.0), (-3.0, 0.5), (0.2, 2.0), (-2.0, -0.1)] {
            assert!((ln_normal_mass(a, b).exp() - direct(a, b)).abs() < 1e-14);
        }
        // Deep tail: ln(Φ(b) − Φ(a)) ≈ ln φ(a)/a for a ≫ 1, b = ∞-ish.
        let a: f64 = 40.0;
        let approx = -0.5 * a * a - LN_SQRT_2PI - a.ln();
        assert!((ln_normal_mass(a, 1e3) - approx).abs() < 1e-3);
        assert!(ln_normal_mass(-45.0, -40.0).is_finite());
    }

    #[test]
    fn truncated_sampler_stays_in_box_even_far_in_the_tail() {
        let mut rng = stream(1, Purpose::Misc, 0, 0);
        for mean in [0.0, 4.0, 11.0, -30.0] {
            let tn = TruncatedNormal {
                mean,
                sd: 0.5f64.sqrt(),
                low: -5.0,
                high: 5.0,
            };
            for _ in 0..200 {
                let x = tn.sample(&mut rng, REJECTION_BUDGET).unwrap();
                assert!((-5.0..=5.0).contains(&x));
            }
        }
    }

    #[test]
    fn discretized_probabilities_sum_to_one() {
        let rbf = RbfMean::new(vec![vec![0.0], vec![1.0]], 0.5, 1).unwrap();
        let mut p = DiscretizedPolicy::new(rbf, vec![0.5], vec![vec![-1.0], vec![1.0]]).unwrap();
        p.set_params(&[0.4, -1.2]).unwrap();
        for s in [[0.0], [1.0]] {
            let pr = p.probabilities(&s);
            assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(pr.iter().all(|v| v.ln() >= p.log_nu()));
        }
    }

    #[test]
    fn grid_centers_layout() {
        let c = grid_centers(&[0.0, 0.0], &[10.0, 10.0], &[3, 2]);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![0.0, 0.0]);
        assert_eq!(c[5], vec![10.0, 10.0]);
        assert_eq!(grid_centers(&[0.0], &[2.0], &[1]), vec![vec![1.0]]);
    }
}
