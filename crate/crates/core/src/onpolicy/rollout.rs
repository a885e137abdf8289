//! Fixed-size on-policy rollout collection.
//!
//! A `Collector` owns one environment and the RNG streams that drive it,
//! and persists the in-progress episode across batches: collecting T steps
//! twice is the same trajectory as collecting 2T steps once.

use crate::distributions::{ActionSample, PolicyNet};
use crate::environments::{Environment, EnvSpec};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::{rng_for, stream, Rng};

/// One batch of exactly T environment transitions plus what the update
/// rules need alongside them: the acting policy's samples (which carry
/// behavior log-probs), value predictions at collection time, and a
/// bootstrap value for the truncated tail episode.
pub struct RolloutBatch {
    pub obs: Vec<Vec<f64>>,
    pub samples: Vec<ActionSample>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// Value prediction for the observation after the final step; zero if
    /// that step ended its episode.
    pub bootstrap_value: f64,
    /// Total rewards of episodes that finished inside this batch.
    pub episode_returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn behavior_log_probs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.behavior_log_prob).collect()
    }
}

pub struct Collector {
    env: Box<dyn Environment>,
    env_rng: Rng,
    sample_rng: Rng,
    current_obs: Vec<f64>,
    episode_return: f64,
    in_episode: bool,
}

impl Collector {
    /// The collector derives its environment-reset and action-sampling
    /// streams from `seed`, so two collectors with the same seed, policy,
    /// and environment produce bitwise-identical batches.
    pub fn new(env: Box<dyn Environment>, seed: u64) -> Collector {
        Collector {
            env,
            env_rng: rng_for(seed, stream::ENV),
            sample_rng: rng_for(seed, stream::SAMPLE),
            current_obs: Vec::new(),
            episode_return: 0.0,
            in_episode: false,
        }
    }

    pub fn env_spec(&self) -> EnvSpec {
        self.env.spec()
    }

    /// Collect exactly `t` transitions under `policy`, resetting the
    /// environment whenever an episode ends. `value_fn` is consulted once
    /// per step (for the stored value predictions) and once more for the
    /// bootstrap when the batch ends mid-episode.
    pub fn collect(
        &mut self,
        policy: &PolicyNet,
        value_fn: impl Fn(&[f64]) -> f64,
        t: usize,
    ) -> CoreResult<RolloutBatch> {
        assert!(t >= 1, "batch must contain at least one step");
        let mut batch = RolloutBatch {
            obs: Vec::with_capacity(t),
            samples: Vec::with_capacity(t),
            rewards: Vec::with_capacity(t),
            dones: Vec::with_capacity(t),
            values: Vec::with_capacity(t),
            bootstrap_value: 0.0,
            episode_returns: Vec::new(),
        };
        for step_index in 0..t {
            if !self.in_episode {
                self.current_obs = self.env.reset(&mut self.env_rng);
                self.episode_return = 0.0;
                self.in_episode = true;
            }
            let with_step = |e: CoreError| match e {
                CoreError::Numeric {
                    what,
                    head,
                    dim,
                    step: None,
                } => CoreError::numeric_at(what, head, dim, Some(step_index)),
                other => other,
            };
            let dist = policy.distribution(&self.current_obs).map_err(with_step)?;
            let sample = dist.sample(&mut self.sample_rng).map_err(with_step)?;
            let value = value_fn(&self.current_obs);
            let result = self.env.step(&sample.continuous).map_err(with_step)?;
            self.episode_return += result.reward;
            batch.obs.push(std::mem::replace(&mut self.current_obs, result.obs));
            batch.samples.push(sample);
            batch.rewards.push(result.reward);
            batch.dones.push(result.done);
            batch.values.push(value);
            if result.done {
                batch.episode_returns.push(self.episode_return);
                self.in_episode = false;
            }
        }
        batch.bootstrap_value = if self.in_episode {
            value_fn(&self.current_obs)
        } else {
            0.0
        };
        Ok(batch)
    }
}
