//! Clipped-surrogate policy update.

use super::adam::Adam;
use super::config::AlgoConfig;
use super::graphs::{
    batch_distributions, mean_entropy, mean_kl, surrogate_diagnostics,
};
use super::rollout::RolloutBatch;
use super::UpdateReport;
use crate::diffmath::{ParameterVector, Tape, Var};
use crate::distributions::PolicyNet;
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use rand::seq::SliceRandom;

/// Several epochs of shuffled-minibatch ascent on
/// `mean(min(ratio * A, clamp(ratio, 1 - clip, 1 + clip) * A))`
/// plus an optional entropy bonus. On ties the unclipped branch carries
/// the gradient, so a freshly collected batch (all ratios 1) starts from
/// the vanilla policy-gradient direction.
pub fn ppo_update(
    policy: &mut PolicyNet,
    opt: &mut Adam,
    batch: &RolloutBatch,
    advantages: &[f64],
    cfg: &AlgoConfig,
    shuffle_rng: &mut Rng,
) -> CoreResult<UpdateReport> {
    assert_eq!(batch.len(), advantages.len(), "one advantage per step");
    let old_dists = batch_distributions(policy, &batch.obs)?;
    let mut params = policy.flatten().0;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(shuffle_rng);
        for chunk in order.chunks(cfg.minibatch) {
            let grad = minibatch_gradient(policy, batch, advantages, cfg, &params, chunk)?;
            opt.step(&mut params, &grad);
        }
    }
    policy.set_params(&ParameterVector(params))?;
    let new_dists = batch_distributions(policy, &batch.obs)?;
    let (surrogate, clip_fraction) =
        surrogate_diagnostics(&new_dists, &batch.samples, advantages, Some(cfg.clip))?;
    let mean_adv = advantages.iter().sum::<f64>() / advantages.len() as f64;
    Ok(UpdateReport {
        surrogate,
        kl: mean_kl(&old_dists, &new_dists)?,
        clip_fraction,
        entropy: mean_entropy(&new_dists),
        improvement: surrogate - mean_adv,
        rejected: false,
    })
}

/// Gradient of the negated minibatch objective at `params`.
fn minibatch_gradient(
    policy: &PolicyNet,
    batch: &RolloutBatch,
    advantages: &[f64],
    cfg: &AlgoConfig,
    params: &[f64],
    chunk: &[usize],
) -> CoreResult<Vec<f64>> {
    let mut tape: Tape<f64> = Tape::new();
    let flat = tape.leaf_f64(params);
    let nodes = policy.carve(&mut tape, flat);
    let lps: Vec<Var> = chunk
        .iter()
        .map(|&i| policy.log_prob_node(&mut tape, &nodes, &batch.obs[i], &batch.samples[i]))
        .collect();
    let lps = tape.stack(&lps);
    let behavior: Vec<f64> = chunk
        .iter()
        .map(|&i| batch.samples[i].behavior_log_prob)
        .collect();
    let behavior = tape.leaf_f64(&behavior);
    let log_ratio = tape.sub(lps, behavior);
    let ratio = tape.exp(log_ratio);
    let adv: Vec<f64> = chunk.iter().map(|&i| advantages[i]).collect();
    let adv = tape.leaf_f64(&adv);
    let unclipped = tape.mul(ratio, adv);
    let band = tape.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    let clipped = tape.mul(band, adv);
    let pessimistic = tape.min2(unclipped, clipped);
    let surrogate = tape.mean(pessimistic);
    let objective = if cfg.entropy_coef > 0.0 {
        let ents: Vec<Var> = chunk
            .iter()
            .map(|&i| policy.entropy_node(&mut tape, &nodes, &batch.obs[i]))
            .collect();
        let ents = tape.stack(&ents);
        let mean_ent = tape.mean(ents);
        let bonus = tape.scale(mean_ent, cfg.entropy_coef);
        tape.add(surrogate, bonus)
    } else {
        surrogate
    };
    let loss = tape.neg(objective);
    if !tape.scalar_value(loss).is_finite() {
        return Err(CoreError::numeric_at(
            "update loss non-finite",
            Some(policy.head()),
            None,
            None,
        ));
    }
    let adj = tape.backward(loss);
    let grad = adj.grad(flat);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(CoreError::numeric_at(
            "update gradient non-finite",
            Some(policy.head()),
            None,
            None,
        ));
    }
    Ok(grad.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::rollout::Collector;
    use crate::distributions::{HeadKind, PolicyConfig};
    use crate::environments::make_env;
    use crate::rngstream::{rng_for, stream};

    fn setup(head: HeadKind) -> (PolicyNet, RolloutBatch) {
        let cfg = PolicyConfig {
            obs_dim: 1,
            act_dim: 1,
            hidden: vec![8],
            head,
            bins: head.is_atomic().then_some(7),
        };
        let policy = PolicyNet::init(&mut rng_for(0, stream::POLICY_INIT), &cfg).unwrap();
        let mut col = Collector::new(make_env("bimodal-bandit").unwrap(), 0);
        let batch = col.collect(&policy, |_| 0.0, 48).unwrap();
        (policy, batch)
    }

    #[test]
    fn one_update_moves_parameters_and_reports_finite_diagnostics() {
        for head in [HeadKind::Gaussian, HeadKind::Discrete, HeadKind::Ordinal] {
            let (mut policy, batch) = setup(head);
            let before = policy.flatten();
            let adv: Vec<f64> = batch.rewards.clone();
            let mut cfg = AlgoConfig::defaults(super::super::config::Algo::Ppo);
            cfg.epochs = 2;
            cfg.minibatch = 16;
            let mut opt = Adam::new(policy.param_count(), 1e-3);
            let mut shuffle = rng_for(0, stream::SHUFFLE);
            let report =
                ppo_update(&mut policy, &mut opt, &batch, &adv, &cfg, &mut shuffle).unwrap();
            assert_ne!(before.as_slice(), policy.flatten().as_slice());
            assert!(report.kl.is_finite() && report.kl >= 0.0);
            assert!(report.surrogate.is_finite());
            assert!((0.0..=1.0).contains(&report.clip_fraction));
            assert!(!report.rejected);
        }
    }

    #[test]
    fn update_is_deterministic_given_seed_and_params() {
        let (policy, batch) = setup(HeadKind::Discrete);
        let adv: Vec<f64> = batch.rewards.iter().map(|r| r - 0.5).collect();
        let mut cfg = AlgoConfig::defaults(super::super::config::Algo::Ppo);
        cfg.epochs = 3;
        cfg.minibatch = 16;
        let run = || {
            let mut p = PolicyNet::init(
                &mut rng_for(0, stream::POLICY_INIT),
                &PolicyConfig {
                    obs_dim: 1,
                    act_dim: 1,
                    hidden: vec![8],
                    head: HeadKind::Discrete,
                    bins: Some(7),
                },
            )
            .unwrap();
            p.set_params(&policy.flatten()).unwrap();
            let mut opt = Adam::new(p.param_count(), 1e-3);
            let mut shuffle = rng_for(9, stream::SHUFFLE);
            ppo_update(&mut p, &mut opt, &batch, &adv, &cfg, &mut shuffle).unwrap();
            p.flatten()
        };
        assert_eq!(run().as_slice(), run().as_slice());
    }
}
