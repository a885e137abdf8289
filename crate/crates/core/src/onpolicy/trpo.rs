//! Trust-region policy update: natural-gradient step via conjugate
//! gradient on Fisher-vector products, then a backtracking line search
//! holding the mean KL to the trust-region bound.

use super::cg::conjugate_gradient;
use super::config::AlgoConfig;
use super::graphs::{
    batch_distributions, mean_entropy, mean_kl, surrogate_diagnostics, ScaledKlObjective,
    SurrogateObjective,
};
use super::rollout::RolloutBatch;
use super::UpdateReport;
use crate::diffmath::{hessian_vector_product, value_and_grad, ParameterVector};
use crate::distributions::{PolicyDistribution, PolicyNet};
use crate::error::{CoreError, CoreResult};

/// States per Hessian-vector-product tape. Chunking bounds tape memory;
/// results are summed, which is exact because the product is linear in
/// the objective.
const FVP_CHUNK: usize = 256;

/// Relative residual at which conjugate gradient stops early.
const CG_TOL: f64 = 1e-10;

/// One trust-region step:
///
/// 1. `g` = gradient of the importance-weighted advantage objective.
/// 2. Solve `F x = g` by conjugate gradient, where `F v` is the
///    Hessian-vector product of the mean KL to the behavior policy plus
///    `damping * v`.
/// 3. Scale to the trust-region boundary: `step = sqrt(2 delta / xFx) x`.
/// 4. Backtrack, accepting the first candidate that improves the
///    objective with measured mean KL at most `delta`; if every candidate
///    fails, restore the behavior parameters and flag the step rejected.
pub fn trpo_update(
    policy: &mut PolicyNet,
    batch: &RolloutBatch,
    advantages: &[f64],
    cfg: &AlgoConfig,
) -> CoreResult<UpdateReport> {
    assert_eq!(batch.len(), advantages.len(), "one advantage per step");
    let old_params = policy.flatten().0;
    let old_dists = batch_distributions(policy, &batch.obs)?;
    let objective = SurrogateObjective {
        policy,
        obs: &batch.obs,
        samples: &batch.samples,
        advantages,
        entropy_coef: cfg.entropy_coef,
    };
    let (_, grad) = value_and_grad(&objective, &old_params);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(CoreError::numeric_at(
            "update gradient non-finite",
            Some(policy.head()),
            None,
            None,
        ));
    }
    let obj_old = evaluate(&old_dists, batch, advantages, cfg.entropy_coef)?;
    if grad.iter().all(|&g| g == 0.0) {
        // Degenerate batch (e.g. all advantages zero): nothing to ascend.
        return Ok(UpdateReport {
            surrogate: obj_old,
            kl: 0.0,
            clip_fraction: 0.0,
            entropy: mean_entropy(&old_dists),
            improvement: 0.0,
            rejected: true,
        });
    }

    let fvp = |v: &[f64]| fisher_vector_product(policy, batch, &old_dists, &old_params, v, cfg);
    let solved = conjugate_gradient(&fvp, &grad, cfg.cg_iters, CG_TOL)?;
    let x = solved.x;
    let fx = fvp(&x);
    let xfx: f64 = x.iter().zip(fx.iter()).map(|(a, b)| a * b).sum();
    if !xfx.is_finite() || xfx <= 0.0 {
        return Err(CoreError::numeric(format!(
            "trust-region curvature {xfx:.3e} not positive"
        )));
    }
    let scale = (2.0 * cfg.delta / xfx).sqrt();
    let full_step: Vec<f64> = x.iter().map(|xi| scale * xi).collect();

    for k in 0..cfg.max_backtracks as i32 {
        let frac = cfg.backtrack_factor.powi(k);
        let candidate: Vec<f64> = old_params
            .iter()
            .zip(full_step.iter())
            .map(|(p, s)| p + frac * s)
            .collect();
        if candidate.iter().any(|p| !p.is_finite()) {
            continue;
        }
        policy.set_params(&ParameterVector(candidate))?;
        let Ok(new_dists) = batch_distributions(policy, &batch.obs) else {
            continue; // non-finite outputs at this step length; shrink
        };
        let kl = mean_kl(&old_dists, &new_dists)?;
        let obj_new = evaluate(&new_dists, batch, advantages, cfg.entropy_coef)?;
        if obj_new.is_finite() && kl.is_finite() && obj_new > obj_old && kl <= cfg.delta {
            let (surrogate, _) =
                surrogate_diagnostics(&new_dists, &batch.samples, advantages, None)?;
            return Ok(UpdateReport {
                surrogate,
                kl,
                clip_fraction: 0.0,
                entropy: mean_entropy(&new_dists),
                improvement: obj_new - obj_old,
                rejected: false,
            });
        }
    }

    policy.set_params(&ParameterVector(old_params))?;
    Ok(UpdateReport {
        surrogate: obj_old,
        kl: 0.0,
        clip_fraction: 0.0,
        entropy: mean_entropy(&old_dists),
        improvement: 0.0,
        rejected: true,
    })
}

/// Damped Fisher-vector product: Hessian of the mean KL at the behavior
/// parameters applied to `v`, accumulated over bounded chunks.
fn fisher_vector_product(
    policy: &PolicyNet,
    batch: &RolloutBatch,
    old_dists: &[PolicyDistribution],
    old_params: &[f64],
    v: &[f64],
    cfg: &AlgoConfig,
) -> Vec<f64> {
    let total = batch.len();
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < total {
        let end = (start + FVP_CHUNK).min(total);
        let chunk = ScaledKlObjective {
            policy,
            obs: &batch.obs[start..end],
            old: &old_dists[start..end],
            scale: 1.0 / total as f64,
        };
        let r = hessian_vector_product(&chunk, old_params, v);
        for (o, h) in out.iter_mut().zip(r.hvp.iter()) {
            *o += h;
        }
        start = end;
    }
    for (o, vi) in out.iter_mut().zip(v.iter()) {
        *o += cfg.cg_damping * vi;
    }
    out
}

/// The line-search acceptance functional, measured from closed-form
/// distributions: importance-weighted advantage plus the entropy bonus.
fn evaluate(
    dists: &[PolicyDistribution],
    batch: &RolloutBatch,
    advantages: &[f64],
    entropy_coef: f64,
) -> CoreResult<f64> {
    let (surrogate, _) = surrogate_diagnostics(dists, &batch.samples, advantages, None)?;
    Ok(surrogate + entropy_coef * mean_entropy(dists))
}
