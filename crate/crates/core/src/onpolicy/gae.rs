//! Lambda-weighted advantage estimation over a collected batch.

use super::rollout::RolloutBatch;
use crate::error::{CoreError, CoreResult};

pub struct AdvantageEstimate {
    pub advantages: Vec<f64>,
    /// Regression targets for the value function: advantage + value.
    pub returns: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

/// Backward recursion over temporal-difference residuals:
///
/// ```text
/// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
/// A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// ```
///
/// truncated both at episode ends (done flags) and at the batch boundary,
/// where the stored bootstrap value stands in for V(s_{t+1}).
///
/// `gamma = 1` is accepted here (useful for exact Monte-Carlo checks);
/// training configs restrict it to [0, 1) separately.
pub fn gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> CoreResult<AdvantageEstimate> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(CoreError::invalid_config(format!(
            "gamma {gamma} outside [0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoreError::invalid_config(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    let t_len = batch.len();
    let mut advantages = vec![0.0; t_len];
    let mut tail = 0.0;
    for t in (0..t_len).rev() {
        let (next_value, next_adv) = if batch.dones[t] {
            (0.0, 0.0)
        } else if t + 1 == t_len {
            (batch.bootstrap_value, 0.0)
        } else {
            (batch.values[t + 1], tail)
        };
        let delta = batch.rewards[t] + gamma * next_value - batch.values[t];
        tail = delta + gamma * lambda * next_adv;
        advantages[t] = tail;
    }
    let returns = advantages
        .iter()
        .zip(batch.values.iter())
        .map(|(a, v)| a + v)
        .collect();
    Ok(AdvantageEstimate {
        advantages,
        returns,
        gamma,
        lambda,
    })
}

/// Shift and scale to mean 0, standard deviation 1 (population convention).
/// A batch with zero spread is left centered but unscaled.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    for a in adv.iter_mut() {
        *a = (*a - mean) * scale;
    }
}
