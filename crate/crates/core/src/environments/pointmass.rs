//! Velocity-damped point mass steered toward a random goal in the plane.
//!
//! The action is a bounded acceleration command. Position integrates the
//! current velocity before the velocity update, so a single action takes
//! two steps to show up in position: a deliberate one-step actuation lag
//! that rewards policies which anticipate rather than react.

use super::{check_action, EnvSpec, Environment, StepResult};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use rand::Rng as _;

const DT: f64 = 0.1;
const DAMPING: f64 = 0.9;
const ACTION_COST: f64 = 0.01;
const HORIZON: usize = 64;

pub struct PointMassReacher {
    pos: [f64; 2],
    vel: [f64; 2],
    goal: [f64; 2],
    steps_taken: usize,
}

impl PointMassReacher {
    pub fn new() -> Self {
        PointMassReacher {
            pos: [0.0; 2],
            vel: [0.0; 2],
            goal: [0.0; 2],
            steps_taken: HORIZON,
        }
    }

    fn observe(&self) -> Vec<f64> {
        vec![
            self.pos[0], self.pos[1], self.vel[0], self.vel[1], self.goal[0], self.goal[1],
        ]
    }
}

impl Default for PointMassReacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PointMassReacher {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            id: "pointmass-reacher",
            obs_dim: 6,
            act_dim: 2,
            horizon: HORIZON,
            // Distance to goal is bounded by ~10 once velocity saturates
            // near 1/(1-0.9); with the action penalty the per-step reward
            // stays far above -700/64.
            min_return: -700.0,
        }
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.pos = [0.0; 2];
        self.vel = [0.0; 2];
        self.goal = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        self.steps_taken = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> CoreResult<StepResult> {
        check_action(action, 2)?;
        if self.steps_taken >= HORIZON {
            return Err(CoreError::contract("point mass episode already finished"));
        }
        for d in 0..2 {
            self.pos[d] += DT * self.vel[d];
            self.vel[d] = DAMPING * self.vel[d] + DT * action[d];
        }
        self.steps_taken += 1;
        let dist = ((self.pos[0] - self.goal[0]).powi(2) + (self.pos[1] - self.goal[1]).powi(2))
            .sqrt();
        let effort = action[0] * action[0] + action[1] * action[1];
        Ok(StepResult {
            obs: self.observe(),
            reward: -dist - ACTION_COST * effort,
            done: self.steps_taken == HORIZON,
        })
    }
}
