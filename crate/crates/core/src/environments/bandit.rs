//! One-step bandit with a bimodal reward over the action interval.
//!
//! The curve is two unequal Gaussian bumps: a wide, low mode at −0.45
//! (height 0.62) and a narrow, high mode at +0.6 (height ~1.0). A policy
//! that hill-climbs from broad initial coverage tends to find the wide
//! mode first and stay there; resolving the narrow global mode requires
//! either keeping probability mass on both or the luck of the draw, which
//! is exactly the behavior the head comparison probes. The narrow mode
//! sits on a grid atom for every K ≡ 1 (mod 5) grid, in particular K=11.

use super::{check_action, EnvSpec, Environment, StepResult};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;

const WIDE_CENTER: f64 = -0.45;
const WIDE_HEIGHT: f64 = 0.62;
const WIDE_WIDTH: f64 = 0.25;
const NARROW_CENTER: f64 = 0.6;
const NARROW_WIDTH: f64 = 0.08;

/// Deterministic bimodal reward; defined for a in [−1, 1].
pub fn bandit_reward(a: f64) -> CoreResult<f64> {
    if !(-1.0..=1.0).contains(&a) {
        return Err(CoreError::contract(format!("bandit action {a} outside [-1, 1]")));
    }
    let wide = WIDE_HEIGHT * gaussian_bump(a, WIDE_CENTER, WIDE_WIDTH);
    let narrow = gaussian_bump(a, NARROW_CENTER, NARROW_WIDTH);
    Ok(wide + narrow)
}

fn gaussian_bump(a: f64, center: f64, width: f64) -> f64 {
    let z = (a - center) / width;
    (-0.5 * z * z).exp()
}

pub struct BimodalBandit {
    steps_taken: usize,
}

impl BimodalBandit {
    pub fn new() -> Self {
        BimodalBandit { steps_taken: 1 }
    }
}

impl Default for BimodalBandit {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for BimodalBandit {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            id: "bimodal-bandit",
            obs_dim: 1,
            act_dim: 1,
            horizon: 1,
            min_return: 0.0,
        }
    }

    fn reset(&mut self, _rng: &mut Rng) -> Vec<f64> {
        self.steps_taken = 0;
        vec![0.0]
    }

    fn step(&mut self, action: &[f64]) -> CoreResult<StepResult> {
        check_action(action, 1)?;
        if self.steps_taken >= 1 {
            return Err(CoreError::contract("bandit episode already finished"));
        }
        self.steps_taken = 1;
        Ok(StepResult {
            obs: vec![0.0],
            reward: bandit_reward(action[0])?,
            done: true,
        })
    }
}
