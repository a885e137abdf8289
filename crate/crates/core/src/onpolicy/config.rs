//! Algorithm selection and hyperparameters for one training run.

use crate::error::{CoreError, CoreResult};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The three policy-update rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Ppo,
    Trpo,
    Vpg,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Ppo, Algo::Trpo, Algo::Vpg];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Ppo => "ppo",
            Algo::Trpo => "trpo",
            Algo::Vpg => "vpg",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = CoreError;

    fn from_str(s: &str) -> CoreResult<Algo> {
        match s {
            "ppo" => Ok(Algo::Ppo),
            "trpo" => Ok(Algo::Trpo),
            "vpg" => Ok(Algo::Vpg),
            other => Err(CoreError::invalid_config(format!(
                "unknown algorithm '{other}' (expected ppo, trpo, or vpg)"
            ))),
        }
    }
}

/// Everything one update step needs beyond the batch itself. A single
/// struct covers all three algorithms; fields irrelevant to the selected
/// algorithm are carried but ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algo: Algo,
    /// Environment steps collected per update (T).
    pub batch_steps: usize,
    /// Discount factor, in [0, 1).
    pub gamma: f64,
    /// Advantage-estimation decay, in [0, 1].
    pub lambda: f64,
    /// Entropy bonus weight added to the surrogate (0 disables).
    pub entropy_coef: f64,
    /// Rescale advantages to mean 0, std 1 per batch.
    pub normalize_advantages: bool,
    /// Step size for the first-order updates (ppo, vpg).
    pub learning_rate: f64,
    /// Likelihood-ratio clip half-width, in (0, 1) (ppo).
    pub clip: f64,
    /// Passes over the batch per update (ppo).
    pub epochs: usize,
    /// Samples per gradient step (ppo).
    pub minibatch: usize,
    /// Trust-region bound on mean KL (trpo).
    pub delta: f64,
    /// Conjugate-gradient iteration cap (trpo).
    pub cg_iters: usize,
    /// Curvature damping added to the Fisher-vector product (trpo).
    pub cg_damping: f64,
    /// Line-search shrink factor per backtrack, in (0, 1) (trpo).
    pub backtrack_factor: f64,
    /// Line-search attempt cap (trpo).
    pub max_backtracks: usize,
    /// Passes over the batch when fitting the value function.
    pub value_epochs: usize,
    /// Samples per value-fit gradient step.
    pub value_minibatch: usize,
    /// Step size for value fitting.
    pub value_lr: f64,
}

impl AlgoConfig {
    /// Library defaults for the given algorithm.
    pub fn defaults(algo: Algo) -> AlgoConfig {
        AlgoConfig {
            algo,
            batch_steps: 2048,
            gamma: 0.99,
            lambda: 0.95,
            entropy_coef: 0.0,
            normalize_advantages: true,
            learning_rate: 3e-4,
            clip: 0.2,
            epochs: 10,
            minibatch: 64,
            delta: 0.01,
            cg_iters: 10,
            cg_damping: 0.1,
            backtrack_factor: 0.5,
            max_backtracks: 10,
            value_epochs: 5,
            value_minibatch: 64,
            value_lr: 1e-3,
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        fn bad(msg: String) -> CoreResult<()> {
            Err(CoreError::invalid_config(msg))
        }
        if self.batch_steps < 1 {
            return bad("batch_steps must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !self.entropy_coef.is_finite() || self.entropy_coef < 0.0 {
            return bad(format!("entropy_coef {} must be >= 0", self.entropy_coef));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad(format!("learning_rate {} must be >= 0", self.learning_rate));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad(format!("clip {} outside (0, 1)", self.clip));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad(format!("delta {} must be > 0", self.delta));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad(format!(
                "backtrack_factor {} outside (0, 1)",
                self.backtrack_factor
            ));
        }
        if !(self.value_lr > 0.0) || !self.value_lr.is_finite() {
            return bad(format!("value_lr {} must be > 0", self.value_lr));
        }
        for (name, n) in [
            ("epochs", self.epochs),
            ("minibatch", self.minibatch),
            ("cg_iters", self.cg_iters),
            ("max_backtracks", self.max_backtracks),
            ("value_epochs", self.value_epochs),
            ("value_minibatch", self.value_minibatch),
        ] {
            if n < 1 {
                return bad(format!("{name} must be >= 1"));
            }
        }
        if !self.cg_damping.is_finite() || self.cg_damping < 0.0 {
            return bad(format!("cg_damping {} must be >= 0", self.cg_damping));
        }
        Ok(())
    }
}
