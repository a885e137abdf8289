//! End-to-end training loop: collect, estimate advantages, update policy,
//! refit the value function, repeat until the step budget is spent.

use super::adam::Adam;
use super::config::{Algo, AlgoConfig};
use super::gae::{gae, normalize_advantages};
use super::ppo::ppo_update;
use super::rollout::Collector;
use super::trpo::trpo_update;
use super::value::{value_fit, ValueNet};
use super::vpg::vanilla_pg_update;
use crate::distributions::{PolicyConfig, PolicyNet};
use crate::environments::make_env;
use crate::error::{CoreError, CoreResult};
use crate::rngstream::{rng_for, stream, Rng};
use std::collections::VecDeque;
use std::time::Instant;

/// Completed episodes kept for the rolling return statistics.
const RETURN_WINDOW: usize = 100;

/// Per-update record; one CSV row downstream.
#[derive(Clone, Debug)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    /// Cumulative environment steps after this update.
    pub env_steps: usize,
    /// Mean return over the last `RETURN_WINDOW` completed episodes
    /// (NaN until the first episode completes).
    pub mean_return: f64,
    pub std_return: f64,
    pub surrogate: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
    pub rejected: bool,
    pub value_pre_mse: f64,
    pub value_post_mse: f64,
    pub wall_ms: f64,
}

/// How a training run ended. Numeric failures terminate the run early but
/// are data, not crashes: the history up to the failure is retained.
pub struct TrainOutcome {
    pub history: Vec<IterationDiagnostics>,
    pub terminated_early: bool,
    pub failure: Option<String>,
    pub total_env_steps: usize,
}

impl TrainOutcome {
    /// Rolling mean return at the last completed update, if any.
    pub fn final_mean_return(&self) -> Option<f64> {
        self.history.last().map(|d| d.mean_return)
    }
}

pub struct Trainer {
    policy: PolicyNet,
    value: ValueNet,
    collector: Collector,
    cfg: AlgoConfig,
    policy_opt: Adam,
    value_opt: Adam,
    shuffle_rng: Rng,
    recent_returns: VecDeque<f64>,
    iteration: usize,
    total_env_steps: usize,
}

impl Trainer {
    /// Build a full training stack from one seed. All randomness (policy
    /// init, value init, environment, action sampling, minibatch order)
    /// derives from `(seed, stream)` pairs, so a `(config, seed)` pair
    /// names one exact trajectory of the whole run.
    pub fn new(
        env_id: &str,
        policy_cfg: &PolicyConfig,
        cfg: AlgoConfig,
        seed: u64,
    ) -> CoreResult<Trainer> {
        cfg.validate()?;
        let env = make_env(env_id)?;
        let spec = env.spec();
        if policy_cfg.obs_dim != spec.obs_dim || policy_cfg.act_dim != spec.act_dim {
            return Err(CoreError::invalid_config(format!(
                "policy dims ({}, {}) do not match environment '{}' dims ({}, {})",
                policy_cfg.obs_dim, policy_cfg.act_dim, spec.id, spec.obs_dim, spec.act_dim
            )));
        }
        let policy = PolicyNet::init(&mut rng_for(seed, stream::POLICY_INIT), policy_cfg)?;
        let value = ValueNet::init(
            &mut rng_for(seed, stream::VALUE_INIT),
            spec.obs_dim,
            &policy_cfg.hidden,
        );
        let policy_opt = Adam::new(policy.param_count(), cfg.learning_rate);
        let value_opt = Adam::new(value.param_count(), cfg.value_lr);
        Ok(Trainer {
            policy,
            value,
            collector: Collector::new(env, seed),
            cfg,
            policy_opt,
            value_opt,
            shuffle_rng: rng_for(seed, stream::SHUFFLE),
            recent_returns: VecDeque::with_capacity(RETURN_WINDOW),
            iteration: 0,
            total_env_steps: 0,
        })
    }

    pub fn policy(&self) -> &PolicyNet {
        &self.policy
    }

    pub fn value(&self) -> &ValueNet {
        &self.value
    }

    pub fn total_env_steps(&self) -> usize {
        self.total_env_steps
    }

    /// One collect/estimate/update/fit cycle.
    pub fn step(&mut self) -> CoreResult<IterationDiagnostics> {
        let t0 = Instant::now();
        let batch = self.collector.collect(
            &self.policy,
            |o| self.value.predict(o),
            self.cfg.batch_steps,
        )?;
        let est = gae(&batch, self.cfg.gamma, self.cfg.lambda)?;
        let mut advantages = est.advantages;
        if self.cfg.normalize_advantages {
            normalize_advantages(&mut advantages);
        }
        let report = match self.cfg.algo {
            Algo::Ppo => ppo_update(
                &mut self.policy,
                &mut self.policy_opt,
                &batch,
                &advantages,
                &self.cfg,
                &mut self.shuffle_rng,
            )?,
            Algo::Trpo => trpo_update(&mut self.policy, &batch, &advantages, &self.cfg)?,
            Algo::Vpg => vanilla_pg_update(
                &mut self.policy,
                &batch,
                &advantages,
                self.cfg.learning_rate,
            )?,
        };
        let fit = value_fit(
            &mut self.value,
            &mut self.value_opt,
            &batch.obs,
            &est.returns,
            self.cfg.value_epochs,
            self.cfg.value_minibatch,
            &mut self.shuffle_rng,
        )?;
        for &r in &batch.episode_returns {
            if self.recent_returns.len() == RETURN_WINDOW {
                self.recent_returns.pop_front();
            }
            self.recent_returns.push_back(r);
        }
        self.total_env_steps += batch.len();
        self.iteration += 1;
        let (mean_return, std_return) = window_stats(&self.recent_returns);
        Ok(IterationDiagnostics {
            iteration: self.iteration,
            env_steps: self.total_env_steps,
            mean_return,
            std_return,
            surrogate: report.surrogate,
            kl: report.kl,
            clip_fraction: report.clip_fraction,
            entropy: report.entropy,
            rejected: report.rejected,
            value_pre_mse: fit.pre_mse,
            value_post_mse: fit.post_mse,
            wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        })
    }

    /// Run updates until at least `total_env_steps` environment steps have
    /// been consumed. A numeric failure ends the run early and is recorded
    /// in the outcome; contract and config errors propagate. The callback
    /// sees each record as it is produced (for streaming output).
    pub fn run(
        &mut self,
        total_env_steps: usize,
        mut on_iteration: impl FnMut(&IterationDiagnostics),
    ) -> CoreResult<TrainOutcome> {
        let mut history = Vec::new();
        let mut terminated_early = false;
        let mut failure = None;
        while self.total_env_steps < total_env_steps {
            match self.step() {
                Ok(diag) => {
                    on_iteration(&diag);
                    history.push(diag);
                }
                Err(e) if e.is_numeric() => {
                    terminated_early = true;
                    failure = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(TrainOutcome {
            history,
            terminated_early,
            failure,
            total_env_steps: self.total_env_steps,
        })
    }
}

fn window_stats(window: &VecDeque<f64>) -> (f64, f64) {
    if window.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
