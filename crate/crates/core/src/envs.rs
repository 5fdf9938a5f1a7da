//! Benchmark environments: a single-integrator robot among rectangular
//! obstacles, and a cart-pole that must stay left of a wall.
//!
//! Both use the constraint reward
//!
//! ```text
//! R₁(s) = ε(e^{d(s)} − 1)   if s ∈ 𝒞
//!         1 − ε             otherwise
//! ```
//!
//! with `d` a signed distance that is nonpositive inside the safe set `𝒞`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Cmdp, Transition};
use crate::rng::StreamRng;

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    /// Strict interior; the border itself belongs to the safe set.
    pub fn contains_strict(&self, p: &[f64]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    /// Euclidean distance from an exterior point to the rectangle.
    pub fn exterior_distance(&self, p: &[f64]) -> f64 {
        let dx = (self.x0 - p[0]).max(0.0).max(p[0] - self.x1);
        let dy = (self.y0 - p[1]).max(0.0).max(p[1] - self.y1);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nav2dEnv {
    pub low: f64,
    pub high: f64,
    pub obstacles: Vec<Rect>,
    pub target: [f64; 2],
    pub epsilon: f64,
    pub dt: f64,
    pub max_speed: f64,
    /// Initial positions are uniform over this rectangle.
    pub start: Rect,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for Nav2dEnv {
    fn default() -> Self {
        Self {
            low: 0.0,
            high: 10.0,
            obstacles: vec![
                Rect {
                    x0: 3.5,
                    y0: 0.0,
                    x1: 5.0,
                    y1: 3.0,
                },
                Rect {
                    x0: 0.0,
                    y0: 5.0,
                    x1: 3.0,
                    y1: 6.5,
                },
                Rect {
                    x0: 6.5,
                    y0: 3.0,
                    x1: 10.0,
                    y1: 4.5,
                },
            ],
            target: [8.5, 8.0],
            epsilon: 0.01,
            dt: 0.1,
            max_speed: 5.0,
            start: Rect {
                x0: 1.0,
                y0: 1.0,
                x1: 2.0,
                y1: 2.0,
            },
            horizon: 50,
            gamma: 0.98,
        }
    }
}

impl Nav2dEnv {
    pub fn validate(&self) -> Result<()> {
        if !(self.high > self.low && self.dt > 0.0 && self.max_speed > 0.0) {
            return Err(Error::InvalidArgument("nav2d geometry".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn in_safe_set(&self, s: &[f64]) -> bool {
        !self.obstacles.iter().any(|o| o.contains_strict(s))
    }

    /// Distance to the nearest obstacle border or outer wall.
    pub fn distance_to_obstacles(&self, s: &[f64]) -> Result<f64> {
        if !self.in_safe_set(s) {
            return Err(Error::InsideObstacle);
        }
        let walls = (s[0] - self.low)
            .min(self.high - s[0])
            .min(s[1] - self.low)
            .min(self.high - s[1])
            .max(0.0);
        Ok(self
            .obstacles
            .iter()
            .map(|o| o.exterior_distance(s))
            .fold(walls, f64::min))
    }

    pub fn objective_reward(&self, s: &[f64]) -> f64 {
        -(s[0] - self.target[0]).hypot(s[1] - self.target[1])
    }

    pub fn constraint_reward(&self, s: &[f64]) -> f64 {
        match self.distance_to_obstacles(s) {
            Ok(d) => self.epsilon * ((-d).exp() - 1.0),
            Err(_) => 1.0 - self.epsilon,
        }
    }

    /// Policy centers: a `per_side × per_side` grid over the arena.
    pub fn centers(&self, per_side: usize) -> Vec<Vec<f64>> {
        crate::policy::grid_centers(&[self.low; 2], &[self.high; 2], &[per_side; 2])
    }
}

impl Cmdp for Nav2dEnv {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn num_rewards(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward_bounds(&self) -> Vec<f64> {
        let span = (self.high - self.low) * std::f64::consts::SQRT_2;
        vec![span, 1.0 - self.epsilon]
    }

    fn initial_state(&self, rng: &mut StreamRng) -> Vec<f64> {
        vec![
            rng.gen_range(self.start.x0..=self.start.x1),
            rng.gen_range(self.start.y0..=self.start.y1),
        ]
    }

    fn step(&self, s: &[f64], a: &[f64], _rng: &mut StreamRng) -> Result<Transition> {
        let v = self.max_speed;
        let next: Vec<f64> = (0..2)
            .map(|k| (s[k] + self.dt * a[k].clamp(-v, v)).clamp(self.low, self.high))
            .collect();
        let rewards = vec![self.objective_reward(&next), self.constraint_reward(&next)];
        Ok(Transition {
            next,
            rewards,
            terminated: false,
        })
    }
}

// ---------------------------------------------------------------------------

/// Classical cart-pole; state `(x, angle, ẋ, angular rate)`, action a force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartPoleEnv {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub gravity: f64,
    pub max_force: f64,
    pub dt: f64,
    pub wall: f64,
    pub epsilon: f64,
    /// Episode ends once `|angle|` exceeds this.
    pub max_angle: f64,
    /// Initial state components are uniform in `±init_noise`.
    pub init_noise: f64,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.81,
            max_force: 3.0,
            dt: 0.02,
            wall: 0.5,
            epsilon: 0.1,
            max_angle: std::f64::consts::FRAC_PI_4,
            init_noise: 0.01,
            horizon: 200,
            gamma: 0.995,
        }
    }
}

impl CartPoleEnv {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.cart_mass,
            self.pole_mass,
            self.half_length,
            self.gravity,
            self.max_force,
            self.dt,
            self.max_angle,
        ];
        if pos.iter().any(|v| !(*v > 0.0)) || !(self.init_noise >= 0.0) {
            return Err(Error::InvalidArgument(
                "cart-pole constants must be positive".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn derivative(&self, s: &[f64; 4], force: f64) -> [f64; 4] {
        let (th, xd, thd) = (s[1], s[2], s[3]);
        let total = self.cart_mass + self.pole_mass;
        let pml = self.pole_mass * self.half_length;
        let (sin, cos) = th.sin_cos();
        let tmp = (force + pml * thd * thd * sin) / total;
        let thdd = (self.gravity * sin - cos * tmp)
            / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total));
        let xdd = tmp - pml * thdd * cos / total;
        [xd, thd, xdd, thdd]
    }

    /// One RK4 step of length `dt` under a constant force.
    pub fn integrate(&self, s: &[f64; 4], force: f64, dt: f64) -> [f64; 4] {
        let add = |a: &[f64; 4], k: &[f64; 4], h: f64| -> [f64; 4] {
            [
                a[0] + h * k[0],
                a[1] + h * k[1],
                a[2] + h * k[2],
                a[3] + h * k[3],
            ]
        };
        let k1 = self.derivative(s, force);
        let k2 = self.derivative(&add(s, &k1, dt / 2.0), force);
        let k3 = self.derivative(&add(s, &k2, dt / 2.0), force);
        let k4 = self.derivative(&add(s, &k3, dt), force);
        let mut out = *s;
        for i in 0..4 {
            out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    pub fn constraint_reward(&self, s: &[f64]) -> f64 {
        let d = s[0] - self.wall;
        if d <= 0.0 {
            self.epsilon * (d.exp() - 1.0)
        } else {
            1.0 - self.epsilon
        }
    }

    /// Policy centers over `[−3,3]×[−π/4,π/4]×[−1,1]×[−1.5,1.5]`.
    pub fn centers(counts: [usize; 4]) -> Vec<Vec<f64>> {
        let q = std::f64::consts::FRAC_PI_4;
        crate::policy::grid_centers(&[-3.0, -q, -1.0, -1.5], &[3.0, q, 1.0, 1.5], &counts)
    }
}

impl Cmdp for CartPoleEnv {
    fn state_dim(&self) -> usize {
        4
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn num_rewards(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward_bounds(&self) -> Vec<f64> {
        vec![1.0, self.epsilon.max(1.0 - self.epsilon)]
    }

    fn initial_state(&self, rng: &mut StreamRng) -> Vec<f64> {
        let n = self.init_noise;
        (0..4)
            .map(|_| if n > 0.0 { rng.gen_range(-n..=n) } else { 0.0 })
            .collect()
    }

    fn step(&self, s: &[f64], a: &[f64], _rng: &mut StreamRng) -> Result<Transition> {
        let force = a[0].clamp(-self.max_force, self.max_force);
        let next = self
            .integrate(&[s[0], s[1], s[2], s[3]], force, self.dt)
            .to_vec();
        let terminated = next[1].abs() > self.max_angle;
        let rewards = vec![1.0, self.constraint_reward(&next)];
        Ok(Transition {
            next,
            rewards,
            terminated,
        })
    }
}
