//! Objective graphs shared by the update rules, plus the value-level
//! batch diagnostics (measured KL, surrogate, clip fraction, entropy)
//! computed from closed-form distributions rather than the tape.

use crate::diffmath::{ParamScalarFn, Real, Tape, Var};
use crate::distributions::{ActionSample, PolicyDistribution, PolicyNet};
use crate::error::CoreResult;

/// Importance-weighted advantage objective `mean(exp(lp - lp_behavior) * A)`
/// plus an optional entropy bonus: the quantity TRPO ascends, and the
/// unclipped branch of the clipped objective.
pub struct SurrogateObjective<'a> {
    pub policy: &'a PolicyNet,
    pub obs: &'a [Vec<f64>],
    pub samples: &'a [ActionSample],
    pub advantages: &'a [f64],
    pub entropy_coef: f64,
}

impl ParamScalarFn for SurrogateObjective<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        let lps: Vec<Var> = (0..self.obs.len())
            .map(|i| {
                self.policy
                    .log_prob_node(tape, &nodes, &self.obs[i], &self.samples[i])
            })
            .collect();
        let lps = tape.stack(&lps);
        let behavior: Vec<f64> = self.samples.iter().map(|s| s.behavior_log_prob).collect();
        let behavior = tape.leaf_f64(&behavior);
        let log_ratio = tape.sub(lps, behavior);
        let ratio = tape.exp(log_ratio);
        let adv = tape.leaf_f64(self.advantages);
        let weighted = tape.mul(ratio, adv);
        let surrogate = tape.mean(weighted);
        maybe_add_entropy(tape, surrogate, self, self.entropy_coef, &nodes)
    }
}

/// Score-function objective `mean(lp * A)`: its gradient at the behavior
/// parameters is the vanilla policy gradient.
pub struct ScoreObjective<'a> {
    pub policy: &'a PolicyNet,
    pub obs: &'a [Vec<f64>],
    pub samples: &'a [ActionSample],
    pub advantages: &'a [f64],
}

impl ParamScalarFn for ScoreObjective<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        let lps: Vec<Var> = (0..self.obs.len())
            .map(|i| {
                self.policy
                    .log_prob_node(tape, &nodes, &self.obs[i], &self.samples[i])
            })
            .collect();
        let lps = tape.stack(&lps);
        let adv = tape.leaf_f64(self.advantages);
        let weighted = tape.mul(lps, adv);
        tape.mean(weighted)
    }
}

/// Sum of per-state KL(old ‖ new) scaled by `scale`. With `scale = 1/T`
/// over chunks of a T-state batch, chunk results add up to the batch mean,
/// which keeps Hessian-vector-product tapes small.
pub struct ScaledKlObjective<'a> {
    pub policy: &'a PolicyNet,
    pub obs: &'a [Vec<f64>],
    pub old: &'a [PolicyDistribution],
    pub scale: f64,
}

impl ParamScalarFn for ScaledKlObjective<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        let kls: Vec<Var> = (0..self.obs.len())
            .map(|i| self.policy.kl_node(tape, &nodes, &self.obs[i], &self.old[i]))
            .collect();
        let stacked = tape.stack(&kls);
        let total = tape.sum(stacked);
        tape.scale(total, self.scale)
    }
}

fn maybe_add_entropy<S: Real>(
    tape: &mut Tape<S>,
    objective: Var,
    surr: &SurrogateObjective<'_>,
    coef: f64,
    nodes: &crate::distributions::PolicyNodes,
) -> Var {
    if coef == 0.0 {
        return objective;
    }
    let ents: Vec<Var> = surr
        .obs
        .iter()
        .map(|o| surr.policy.entropy_node(tape, nodes, o))
        .collect();
    let stacked = tape.stack(&ents);
    let mean_ent = tape.mean(stacked);
    let scaled = tape.scale(mean_ent, coef);
    tape.add(objective, scaled)
}

/// One term of the clipped objective:
/// `min(ratio * A, clamp(ratio, 1 - clip, 1 + clip) * A)`.
pub fn clipped_term(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    unclipped.min(clipped)
}

/// Forward the policy over every observation in the batch.
pub fn batch_distributions(
    policy: &PolicyNet,
    obs: &[Vec<f64>],
) -> CoreResult<Vec<PolicyDistribution>> {
    obs.iter().map(|o| policy.distribution(o)).collect()
}

/// Mean closed-form KL(old_i ‖ new_i) across matched state distributions.
pub fn mean_kl(
    old: &[PolicyDistribution],
    new: &[PolicyDistribution],
) -> CoreResult<f64> {
    assert_eq!(old.len(), new.len(), "distribution lists must align");
    let mut total = 0.0;
    for (o, n) in old.iter().zip(new.iter()) {
        total += o.kl(n)?;
    }
    Ok(total / old.len() as f64)
}

pub fn mean_entropy(dists: &[PolicyDistribution]) -> f64 {
    dists.iter().map(PolicyDistribution::entropy).sum::<f64>() / dists.len() as f64
}

/// Batch surrogate value under `dists`, optionally clipped, plus the
/// fraction of likelihood ratios falling outside the clip band.
pub fn surrogate_diagnostics(
    dists: &[PolicyDistribution],
    samples: &[ActionSample],
    advantages: &[f64],
    clip: Option<f64>,
) -> CoreResult<(f64, f64)> {
    let n = dists.len();
    assert!(n > 0 && samples.len() == n && advantages.len() == n);
    let mut total = 0.0;
    let mut clipped_count = 0usize;
    for i in 0..n {
        let lp = dists[i].log_prob(&samples[i])?;
        let ratio = (lp - samples[i].behavior_log_prob).exp();
        match clip {
            Some(c) => {
                total += clipped_term(ratio, advantages[i], c);
                if ratio < 1.0 - c || ratio > 1.0 + c {
                    clipped_count += 1;
                }
            }
            None => total += ratio * advantages[i],
        }
    }
    Ok((total / n as f64, clipped_count as f64 / n as f64))
}
