//! Declarative experiment configuration (TOML) and the shipped presets.

use serde::{Deserialize, Serialize};

use crate::envs::{CartPoleEnv, Nav2dEnv};
use crate::error::{Error, Result};
use crate::estimate::ClipRange;
use crate::flow::Schedule;
use crate::policy::{grid_centers, ActionBox, RbfGaussianPolicy, RbfMean};
use crate::qcqp::Beta;
use crate::train::{BaselineSpec, ReplayRule, StepRule, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Flow,
    Train,
    Validate,
    Certify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Nav2d(Nav2dEnv),
    CartPole(CartPoleEnv),
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Nav2d(e) => e.validate(),
            EnvSpec::CartPole(e) => e.validate(),
        }
    }

    fn state_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            EnvSpec::Nav2d(e) => (vec![e.low; 2], vec![e.high; 2]),
            EnvSpec::CartPole(_) => {
                let q = std::f64::consts::FRAC_PI_4;
                (vec![-3.0, -q, -1.0, -1.5], vec![3.0, q, 1.0, 1.5])
            }
        }
    }

    fn action_half_width(&self) -> (usize, f64) {
        match self {
            EnvSpec::Nav2d(e) => (2, e.max_speed),
            EnvSpec::CartPole(e) => (1, e.max_force),
        }
    }
}

/// RBF Gaussian policy; centers form a grid over the environment's state box
/// and the action box is the environment's action range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// Grid points per state dimension.
    pub centers: Vec<usize>,
    pub rbf_variance: f64,
    /// Diagonal action variance (same for every action dimension).
    pub action_var: f64,
}

impl PolicySpec {
    pub fn build(&self, env: &EnvSpec) -> Result<RbfGaussianPolicy> {
        let (low, high) = env.state_box();
        if self.centers.len() != low.len() {
            return Err(Error::Dimension {
                what: "policy center counts",
                expected: low.len(),
                got: self.centers.len(),
            });
        }
        let (k, w) = env.action_half_width();
        let rbf = RbfMean::new(
            grid_centers(&low, &high, &self.centers),
            self.rbf_variance,
            k,
        )?;
        RbfGaussianPolicy::new(rbf, vec![self.action_var; k], ActionBox::symmetric(w, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub fixture: String,
    pub theta0: Vec<f64>,
    pub alpha: f64,
    pub beta: Beta,
    pub schedule: Schedule,
    pub iters: usize,
    pub kkt_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    /// Independent batches per unbiasedness check.
    pub batches: usize,
    pub batch_size: usize,
    /// Certified update steps in the safety check.
    pub safety_steps: usize,
    pub delta: f64,
    /// Clipped mode: unbiasedness checks are skipped.
    pub clip: Option<ClipRange>,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self {
            batches: 20_000,
            batch_size: 10,
            safety_steps: 500,
            delta: 0.1,
            clip: None,
        }
    }
}

/// Step data from which a margin is computed, as an alternative to giving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginInputs {
    pub v_hat: f64,
    pub alpha: f64,
    pub h: f64,
    pub beta: f64,
    pub l_j: f64,
    pub r_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    pub margin: Option<f64>,
    pub step: Option<MarginInputs>,
    pub delta: f64,
    pub phi: f64,
    pub phi_bar: Option<f64>,
    #[serde(default)]
    pub psi: f64,
    pub psi_bar: Option<f64>,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "one")]
    pub q: usize,
    /// Horizon `H` for the multi-step confidence.
    #[serde(default = "one")]
    pub horizon: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out: Option<String>,
    pub flow: Option<FlowSpec>,
    pub env: Option<EnvSpec>,
    pub policy: Option<PolicySpec>,
    pub train: Option<TrainConfig>,
    pub validate: Option<ValidateSpec>,
    pub certify: Option<CertifySpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks that the section needed by `mode` is present and consistent.
    pub fn check(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::InvalidArgument(format!(
                "seed {} does not fit the config format (max {})",
                self.seed,
                i64::MAX
            )));
        }
        let missing =
            |s: &str| Error::InvalidArgument(format!("mode {:?} needs a [{s}] section", self.mode));
        match self.mode {
            Mode::Flow => {
                let f = self.flow.as_ref().ok_or_else(|| missing("flow"))?;
                crate::flow::AnalyticProblem::fixture(&f.fixture)?;
                f.beta.validate()?;
            }
            Mode::Train => {
                let env = self.env.as_ref().ok_or_else(|| missing("env"))?;
                env.validate()?;
                self.policy
                    .as_ref()
                    .ok_or_else(|| missing("policy"))?
                    .build(env)?;
                self.train_config()?.validate()?;
            }
            Mode::Validate => {}
            Mode::Certify => {
                let c = self.certify.as_ref().ok_or_else(|| missing("certify"))?;
                if c.margin.is_none() && c.step.is_none() {
                    return Err(Error::InvalidArgument(
                        "[certify] needs either margin or a [certify.step] table".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The train section with the experiment seed applied.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut t = self
            .train
            .clone()
            .ok_or_else(|| Error::InvalidArgument("missing [train] section".into()))?;
        t.seed = self.seed;
        Ok(t)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "nav2d-full" => Ok(nav2d(1500, 100)),
            "nav2d-desk" => Ok(nav2d(150, 30)),
            "cartpole-full" => Ok(cartpole(300)),
            "cartpole-desk" => Ok(cartpole(30)),
            "flow-disk" => Ok(flow_preset("disk", vec![0.0, 0.0])),
            "flow-box" => Ok(flow_preset("box", vec![0.0, 0.0])),
            "flow-rosenbrock" => Ok(flow_preset("rosenbrock", vec![0.0, 0.0])),
            "validate" => Ok(Self {
                mode: Mode::Validate,
                seed: 1,
                out: None,
                flow: None,
                env: None,
                policy: None,
                train: None,
                validate: Some(ValidateSpec::default()),
                certify: None,
            }),
            "certify-example" => Ok(Self {
                mode: Mode::Certify,
                seed: 0,
                out: None,
                flow: None,
                env: None,
                policy: None,
                train: None,
                validate: None,
                certify: Some(CertifySpec {
                    margin: None,
                    step: Some(MarginInputs {
                        v_hat: -1.0,
                        alpha: 1.0,
                        h: 0.1,
                        beta: 1.0,
                        l_j: 2.0,
                        r_norm: 1.0,
                    }),
                    delta: 0.1,
                    phi: 1.75,
                    phi_bar: None,
                    psi: 0.0,
                    psi_bar: None,
                    dim: 1,
                    q: 1,
                    horizon: 1,
                }),
            }),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset '{name}' (expected one of: {})",
                PRESETS.join(", ")
            ))),
        }
    }
}

pub const PRESETS: [&str; 9] = [
    "nav2d-full",
    "nav2d-desk",
    "cartpole-full",
    "cartpole-desk",
    "flow-disk",
    "flow-box",
    "flow-rosenbrock",
    "validate",
    "certify-example",
];

/// Bound `C` on `‖θ‖²` used by the navigation presets.
pub const NAV2D_BOUND_C: f64 = 400.0;
pub const CARTPOLE_BOUND_C: f64 = 1000.0;

fn nav2d(iterations: usize, episodes: usize) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::Train,
        seed: 1,
        out: None,
        flow: None,
        env: Some(EnvSpec::Nav2d(Nav2dEnv::default())),
        policy: Some(PolicySpec {
            centers: vec![20, 20],
            rbf_variance: 0.5,
            action_var: 0.5,
        }),
        train: Some(TrainConfig {
            iterations,
            episodes_per_iter: episodes,
            replay: ReplayRule::LastTwo,
            alpha: 9.0,
            beta: Beta::Constant(1.0),
            step: StepRule::Constant { h: 0.1 },
            bound_c: NAV2D_BOUND_C,
            clip: Some(ClipRange { lo: 0.8, hi: 1.2 }),
            baseline: BaselineSpec::Zero,
            delta: 0.1,
            seed: 1,
            updates_per_iter: 1,
            checkpoint_every: 50,
        }),
        validate: None,
        certify: None,
    }
}

fn cartpole(iterations: usize) -> ExperimentConfig {
    let q = std::f64::consts::FRAC_PI_4;
    ExperimentConfig {
        mode: Mode::Train,
        seed: 1,
        out: None,
        flow: None,
        env: Some(EnvSpec::CartPole(CartPoleEnv::default())),
        policy: Some(PolicySpec {
            centers: vec![10, 5, 5, 4],
            rbf_variance: 0.5,
            action_var: 0.5,
        }),
        train: Some(TrainConfig {
            iterations,
            episodes_per_iter: 30,
            replay: ReplayRule::Current,
            alpha: 0.1,
            beta: Beta::Constant(1.0),
            step: StepRule::Capped {
                h_max: 1e-3,
                radius: 0.02,
            },
            bound_c: CARTPOLE_BOUND_C,
            clip: Some(ClipRange { lo: 0.8, hi: 1.2 }),
            baseline: BaselineSpec::Binned {
                low: vec![-3.0, -q, -1.0, -1.5],
                high: vec![3.0, q, 1.0, 1.5],
                bins: vec![6, 4, 3, 3],
            },
            delta: 0.1,
            seed: 1,
            updates_per_iter: 2,
            checkpoint_every: 50,
        }),
        validate: None,
        certify: None,
    }
}

fn flow_preset(fixture: &str, theta0: Vec<f64>) -> ExperimentConfig {
    let p = crate::flow::AnalyticProblem::fixture(fixture).expect("shipped fixture");
    let h = p.stepsize(1.0, 1.0);
    ExperimentConfig {
        mode: Mode::Flow,
        seed: 0,
        out: None,
        flow: Some(FlowSpec {
            fixture: fixture.into(),
            theta0,
            alpha: 1.0,
            beta: Beta::Constant(1.0),
            schedule: Schedule::Constant(h),
            iters: 10_000,
            kkt_tol: 1e-4,
        }),
        env: None,
        policy: None,
        train: None,
        validate: None,
        certify: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.check().unwrap();
            let text = c.to_toml().unwrap();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, c, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = ExperimentConfig::preset("flow-disk")
            .unwrap()
            .to_toml()
            .unwrap();
        text = text.replace("iters = ", "iterz = 3\niters = ");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn nav2d_preset_echoes_table_values() {
        let c = ExperimentConfig::preset("nav2d-full").unwrap();
        let t = c.train_config().unwrap();
        assert_eq!(t.alpha, 9.0);
        assert_eq!(t.step, StepRule::Constant { h: 0.1 });
        let p = c.policy.unwrap().build(c.env.as_ref().unwrap()).unwrap();
        assert_eq!(p.rbf.num_centers(), 400);
    }

    #[test]
    fn cartpole_preset_has_1000_centers() {
        let c = ExperimentConfig::preset("cartpole-full").unwrap();
        let p = c.policy.unwrap().build(c.env.as_ref().unwrap()).unwrap();
        assert_eq!(p.rbf.num_centers(), 1000);
        assert_eq!(p.action_var, vec![0.5]);
    }
}
