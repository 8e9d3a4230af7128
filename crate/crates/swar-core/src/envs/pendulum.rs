//! Torque-limited pendulum swing-up with the canonical constants:
//! g=10, m=1, l=1, dt=0.05, torque in [-2, 2], speed clipped to [-8, 8],
//! horizon 200. The observation is (cos th, sin th, th_dot) and the reward
//! is the negated quadratic cost on the pre-step state.

use super::{Env, EnvError, EnvSpec, StepOutcome};
use rand::{Rng, RngCore};

const G: f64 = 10.0;
const M: f64 = 1.0;
const L: f64 = 1.0;
const DT: f64 = 0.05;
pub const MAX_TORQUE: f64 = 2.0;
pub const MAX_SPEED: f64 = 8.0;
pub const HORIZON: usize = 200;

#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl Pendulum {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum",
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                horizon: HORIZON,
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    /// Internal angle state, for diagnostics and invariant checks.
    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    /// Pins the internal state without touching the step counter.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
    }

    /// Total mechanical energy `th_dot^2/6 + 5 cos th` (rod about its end;
    /// conserved by the continuous dynamics when u = 0).
    pub fn energy(&self) -> f64 {
        self.theta_dot * self.theta_dot / 6.0 + 5.0 * self.theta.cos()
    }

    fn obs(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

/// Wraps an angle into [-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = (theta + std::f64::consts::PI).rem_euclid(two_pi);
    if t < 0.0 {
        t += two_pi;
    }
    t - std::f64::consts::PI
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        self.theta_dot = rng.random_range(-1.0..1.0);
        self.steps = 0;
        self.obs()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if action.len() != 1 {
            return Err(EnvError::ActionDim { expected: 1, got: action.len() });
        }
        if !action[0].is_finite() {
            return Err(EnvError::NonFinite("pendulum action"));
        }
        if self.steps >= HORIZON {
            return Err(EnvError::EpisodeOver);
        }
        let u = action[0].clamp(-MAX_TORQUE, MAX_TORQUE);
        let cost = wrap_angle(self.theta).powi(2)
            + 0.1 * self.theta_dot * self.theta_dot
            + 0.001 * u * u;

        // Semi-implicit Euler: update velocity first, then integrate it.
        let acc = 3.0 * G / (2.0 * L) * self.theta.sin() + 3.0 / (M * L * L) * u;
        self.theta_dot = (self.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        if !self.theta.is_finite() || !self.theta_dot.is_finite() {
            return Err(EnvError::NonFinite("pendulum state"));
        }
        self.steps += 1;
        Ok(StepOutcome {
            obs: self.obs(),
            reward: -cost,
            done: self.steps >= HORIZON,
        })
    }
}
