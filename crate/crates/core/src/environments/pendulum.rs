//! Torque-limited pendulum swing-up with the classic quadratic cost.
//!
//! State is (angle, angular velocity) with angle 0 upright. The bounded
//! action scales to a torque too weak to lift the pendulum directly from
//! the bottom, so solving the task requires pumping energy across several
//! swings: a long-horizon credit assignment problem in two dimensions.

use super::{check_action, EnvSpec, Environment, StepResult};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use rand::Rng as _;
use std::f64::consts::PI;

const DT: f64 = 0.05;
const GRAVITY: f64 = 10.0;
const MAX_TORQUE: f64 = 2.0;
const MAX_SPEED: f64 = 8.0;
const HORIZON: usize = 200;

/// Wrap an angle into [−π, π) with 0 upright.
fn angle_normalize(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

pub struct PendulumSwingup {
    theta: f64,
    theta_dot: f64,
    steps_taken: usize,
}

impl PendulumSwingup {
    pub fn new() -> Self {
        PendulumSwingup {
            theta: 0.0,
            theta_dot: 0.0,
            steps_taken: HORIZON,
        }
    }

    /// Place the pendulum at a chosen state; test hook for frozen-state checks.
    #[cfg(test)]
    fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.steps_taken = 0;
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Default for PendulumSwingup {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PendulumSwingup {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            id: "pendulum-swingup",
            obs_dim: 3,
            act_dim: 1,
            horizon: 200,
            // Worst per-step cost: pi^2 + 0.1 * 8^2 + 0.001 * 2^2 ~= 16.3,
            // so 200 steps cannot fall below -3260.
            min_return: -3300.0,
        }
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.theta = rng.gen_range(-PI..=PI);
        self.theta_dot = rng.gen_range(-1.0..=1.0);
        self.steps_taken = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> CoreResult<StepResult> {
        check_action(action, 1)?;
        if self.steps_taken >= HORIZON {
            return Err(CoreError::contract("pendulum episode already finished"));
        }
        let torque = MAX_TORQUE * action[0];
        let angle_err = angle_normalize(self.theta);
        let cost = angle_err * angle_err
            + 0.1 * self.theta_dot * self.theta_dot
            + 0.001 * torque * torque;
        // mass = length = 1: thetadot' = 3g/2 sin(theta) + 3 tau
        let accel = 1.5 * GRAVITY * self.theta.sin() + 3.0 * torque;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        self.steps_taken += 1;
        Ok(StepResult {
            obs: self.observe(),
            reward: -cost,
            done: self.steps_taken == HORIZON,
        })
    }
}
