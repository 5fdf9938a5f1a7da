//! Safety certificate arithmetic and the probability inequalities behind it.
//!
//! A step `θ⁺ = θ + hξ` keeps constraint `j` satisfied whenever the value and
//! gradient estimates are within the margin
//!
//! ```text
//! M̂ⱼ = [−(1−αh)V̂ⱼ + (h/2)(β − Lⱼh)‖ξ‖²] / (1 + h‖ξ‖)
//! ```
//!
//! of the truth. The tail bounds in [`crate::estimate`] turn that into episode
//! counts and a confidence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{geometric_sum, weighted_geometric_sum};

/// Error budget `M̂ⱼ`. May be negative; callers decide what that means.
pub fn margin(v_hat: f64, alpha: f64, h: f64, beta: f64, l_j: f64, r_norm: f64) -> f64 {
    (-(1.0 - alpha * h) * v_hat + 0.5 * h * (beta - l_j * h) * r_norm * r_norm) / (1.0 + h * r_norm)
}

/// Right-hand sides of the two batch-size conditions, plus the smallest
/// purely on-policy batch meeting both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRequirement {
    /// `−(2/M²) log(δ/2)`: lower bound on `J²/(N̄φ² + Ñφ̄²)`.
    pub value_threshold: f64,
    /// `−(2d/M²) log(δ/2d)`: lower bound on `J²/(N̄ψ² + Ñψ̄²)`.
    pub gradient_threshold: f64,
    /// Smallest `N̄` with `Ñ = 0` meeting the value condition.
    pub on_policy_value: u64,
    /// Smallest `N̄` with `Ñ = 0` meeting the gradient condition.
    pub on_policy_gradient: u64,
}

impl EpisodeRequirement {
    pub fn on_policy(&self) -> u64 {
        self.on_policy_value.max(self.on_policy_gradient)
    }

    /// Whether a batch with `n_bar` on-policy and `n_tilde` off-policy episodes
    /// meets both conditions.
    pub fn satisfied_by(&self, n_bar: usize, n_tilde: usize, c: &Constants) -> bool {
        let j = (n_bar + n_tilde) as f64;
        let nb = n_bar as f64;
        let nt = n_tilde as f64;
        let vden = nb * c.phi * c.phi + nt * c.phi_bar * c.phi_bar;
        let gden = nb * c.psi * c.psi + nt * c.psi_bar * c.psi_bar;
        j * j >= self.value_threshold * vden && j * j >= self.gradient_threshold * gden
    }
}

/// The four per-constraint constants that enter the batch conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub phi: f64,
    pub phi_bar: f64,
    pub psi: f64,
    pub psi_bar: f64,
}

fn ceil_count(x: f64) -> u64 {
    // Guard the ceiling against representation noise in exact products.
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(1.0) as u64
    } else {
        x.ceil().max(1.0) as u64
    }
}

pub fn episodes_required(
    m: f64,
    delta: f64,
    c: &Constants,
    dim: usize,
) -> Result<EpisodeRequirement> {
    if !(m > 0.0) {
        return Err(Error::NonPositiveMargin);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (0, 1)".into()));
    }
    let d = dim.max(1) as f64;
    let value_threshold = -(2.0 / (m * m)) * (delta / 2.0).ln();
    let gradient_threshold = -(2.0 * d / (m * m)) * (delta / (2.0 * d)).ln();
    // On-policy: J = N̄ so J²/(N̄φ²) ≥ τ  ⟺  N̄ ≥ τφ².
    Ok(EpisodeRequirement {
        value_threshold,
        gradient_threshold,
        on_policy_value: ceil_count(value_threshold * c.phi * c.phi),
        on_policy_gradient: ceil_count(gradient_threshold * c.psi * c.psi),
    })
}

/// Lipschitz constant of `∇Vⱼ` from reward bound `Bⱼ`, score Lipschitz
/// constant `L` and score bound `B̃`.
pub fn lipschitz_l_j(b_j: f64, l: f64, b_tilde: f64, gamma: f64, horizon: usize) -> f64 {
    let g = geometric_sum(gamma, horizon);
    b_j * l * g * g
        + 2.0 * b_j * b_tilde * b_tilde * weighted_geometric_sum(gamma, horizon)
        + b_j * b_tilde * b_tilde * g * g
}

/// `L_{q+1} = 2√C` for `‖θ‖² − C` restricted to the ball.
pub fn l_bound_constraint(bound_c: f64) -> f64 {
    2.0 * bound_c.sqrt()
}

/// `max(0, 1 − 2qHδ)`.
pub fn horizon_confidence(q: usize, horizon: usize, delta: f64) -> f64 {
    (1.0 - 2.0 * q as f64 * horizon as f64 * delta).clamp(0.0, 1.0)
}

/// `γᵀδ / Σ_{t<T} γᵗ`.
pub fn invariance_reward_offset(gamma: f64, horizon: usize, delta_j: f64) -> f64 {
    gamma.powi(horizon as i32) * delta_j / geometric_sum(gamma, horizon)
}

/// `Rⱼ(s) = 1 − 𝟙_𝒞(s) + offset`: nonpositive value means the trajectory
/// stays in `𝒞` with probability at least `1 − δⱼ`.
pub fn build_invariance_reward<F>(
    in_set: F,
    gamma: f64,
    horizon: usize,
    delta_j: f64,
) -> impl Fn(&[f64]) -> f64
where
    F: Fn(&[f64]) -> bool,
{
    let offset = invariance_reward_offset(gamma, horizon, delta_j);
    move |s| if in_set(s) { offset } else { 1.0 + offset }
}

/// Variance bound `(M − m)²/4`.
pub fn popoviciu(lo: f64, hi: f64) -> f64 {
    (hi - lo) * (hi - lo) / 4.0
}

/// `2 exp(−2ε²/Σ(bᵢ − aᵢ)²)`, an upper bound on `P(|S − 𝔼S| ≥ ε)`.
pub fn hoeffding(ranges: &[(f64, f64)], epsilon: f64) -> f64 {
    let s: f64 = ranges.iter().map(|(a, b)| (b - a) * (b - a)).sum();
    (2.0 * (-2.0 * epsilon * epsilon / s).exp()).min(1.0)
}

/// Lower bound on the probability of an intersection.
pub fn frechet_lower(probs: &[f64]) -> f64 {
    let s: f64 = probs.iter().sum();
    (s - (probs.len() as f64 - 1.0)).max(0.0)
}

/// `(κ/(ε − 1.5ℓ̂σ̄(q/ε* + 1)))²`.
pub fn iteration_bound(
    kappa: f64,
    epsilon: f64,
    ell_hat: f64,
    sigma_bar: f64,
    q: usize,
    epsilon_star: f64,
) -> Result<f64> {
    let correction = 1.5 * ell_hat * sigma_bar * (q as f64 / epsilon_star + 1.0);
    let gap = epsilon - correction;
    if !(gap > 0.0) {
        return Err(Error::VarianceTooLarge);
    }
    Ok((kappa / gap).powi(2))
}

/// Inputs shared by every constraint of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInputs {
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `‖ξ‖` returned by the solver at the current iterate.
    pub r_norm: f64,
    pub delta: f64,
    pub dim: usize,
    pub n_bar: usize,
    pub n_tilde: usize,
}

/// One constraint's part of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCertificate {
    pub v_hat: f64,
    pub l_j: f64,
    pub margin: f64,
    pub constants: Constants,
    /// `None` when the margin is nonpositive.
    pub requirement: Option<EpisodeRequirement>,
    /// Whether the batch actually used meets the requirement.
    pub met: bool,
    /// `1 − δ_V − δ_∇` achieved by the actual batch, clamped to `[0, 1]`.
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyCertificate {
    pub inputs: StepInputs,
    pub constraints: Vec<ConstraintCertificate>,
}

impl SafetyCertificate {
    /// `v_hat[k]`, `l_j[k]` and `constants[k]` describe constraint `k + 1`.
    pub fn new(
        inputs: StepInputs,
        v_hat: &[f64],
        l_j: &[f64],
        constants: &[Constants],
    ) -> Result<Self> {
        let q = v_hat.len();
        if l_j.len() != q || constants.len() != q {
            return Err(Error::Dimension {
                what: "certificate constraint data",
                expected: q,
                got: l_j.len().min(constants.len()),
            });
        }
        let mut out = Vec::with_capacity(q);
        for k in 0..q {
            let m = margin(
                v_hat[k],
                inputs.alpha,
                inputs.h,
                inputs.beta,
                l_j[k],
                inputs.r_norm,
            );
            if !m.is_finite() {
                return Err(Error::NonFinite("certificate margin".into()));
            }
            let c = constants[k];
            let requirement = episodes_required(m, inputs.delta, &c, inputs.dim).ok();
            let met = requirement
                .map(|r| r.satisfied_by(inputs.n_bar, inputs.n_tilde, &c))
                .unwrap_or(false);
            let achieved = if m > 0.0 {
                let pv = crate::estimate::tail_bound_value(
                    m,
                    inputs.n_bar,
                    inputs.n_tilde,
                    c.phi,
                    c.phi_bar,
                );
                let pg = crate::estimate::tail_bound_gradient(
                    m,
                    inputs.n_bar,
                    inputs.n_tilde,
                    c.psi,
                    c.psi_bar,
                    inputs.dim,
                );
                frechet_lower(&[pv, pg])
            } else {
                0.0
            };
            out.push(ConstraintCertificate {
                v_hat: v_hat[k],
                l_j: l_j[k],
                margin: m,
                constants: c,
                requirement,
                met,
                achieved,
            });
        }
        Ok(Self {
            inputs,
            constraints: out,
        })
    }

    pub fn all_met(&self) -> bool {
        self.constraints.iter().all(|c| c.met)
    }

    /// `1 − 2δ` per constraint when every requirement is met, else 0.
    pub fn per_constraint_confidence(&self) -> f64 {
        if self.all_met() {
            (1.0 - 2.0 * self.inputs.delta).max(0.0)
        } else {
            0.0
        }
    }

    /// `1 − 2qδ` when every requirement is met, else 0.
    pub fn joint_confidence(&self) -> f64 {
        if self.all_met() {
            horizon_confidence(self.constraints.len(), 1, self.inputs.delta)
        } else {
            0.0
        }
    }

    /// Fréchet combination of the per-constraint achieved confidences.
    pub fn achieved_joint(&self) -> f64 {
        let p: Vec<f64> = self.constraints.iter().map(|c| c.achieved).collect();
        frechet_lower(&p)
    }

    pub fn min_margin(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }
}
