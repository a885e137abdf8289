//! Single-step vanilla policy gradient.

use super::graphs::{
    batch_distributions, mean_entropy, mean_kl, surrogate_diagnostics, ScoreObjective,
};
use super::rollout::RolloutBatch;
use super::UpdateReport;
use crate::diffmath::{value_and_grad, ParameterVector};
use crate::distributions::PolicyNet;
use crate::error::{CoreError, CoreResult};

/// One plain ascent step `params += lr * grad(mean(A * log pi))` evaluated
/// at the behavior parameters: the textbook score-function estimator with
/// no trust region, clipping, or momentum.
pub fn vanilla_pg_update(
    policy: &mut PolicyNet,
    batch: &RolloutBatch,
    advantages: &[f64],
    learning_rate: f64,
) -> CoreResult<UpdateReport> {
    assert_eq!(batch.len(), advantages.len(), "one advantage per step");
    let old_dists = batch_distributions(policy, &batch.obs)?;
    let objective = ScoreObjective {
        policy,
        obs: &batch.obs,
        samples: &batch.samples,
        advantages,
    };
    let mut params = policy.flatten().0;
    let (_, grad) = value_and_grad(&objective, &params);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(CoreError::numeric_at(
            "update gradient non-finite",
            Some(policy.head()),
            None,
            None,
        ));
    }
    for (p, g) in params.iter_mut().zip(grad.iter()) {
        *p += learning_rate * g;
    }
    policy.set_params(&ParameterVector(params))?;
    let new_dists = batch_distributions(policy, &batch.obs)?;
    let (surrogate, _) =
        surrogate_diagnostics(&new_dists, &batch.samples, advantages, None)?;
    let mean_adv = advantages.iter().sum::<f64>() / advantages.len() as f64;
    Ok(UpdateReport {
        surrogate,
        kl: mean_kl(&old_dists, &new_dists)?,
        clip_fraction: 0.0,
        entropy: mean_entropy(&new_dists),
        improvement: surrogate - mean_adv,
        rejected: false,
    })
}
