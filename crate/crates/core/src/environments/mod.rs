//! Desk-scale control environments over the action space [−1, 1]^m.
//!
//! Three tasks: a one-step bandit with a deliberately bimodal reward, a
//! two-dimensional point-mass reacher, and a torque-limited pendulum
//! swing-up. All are deterministic given (seed, action sequence), and all
//! run to a fixed horizon with no early termination.

mod bandit;
mod pendulum;
mod pointmass;

pub use bandit::{bandit_reward, BimodalBandit};
pub use pendulum::PendulumSwingup;
pub use pointmass::PointMassReacher;

use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;

/// Static description of an environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvSpec {
    pub id: &'static str,
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Steps per episode; `done` is true exactly at this count.
    pub horizon: usize,
    /// A lower bound on any achievable episode return, used as the
    /// sentinel value recorded for prematurely terminated runs.
    pub min_return: f64,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Single-owner mutable environment state. Reset draws all task
/// randomness from the caller's RNG, so distinct instances replay
/// identically from identical streams.
pub trait Environment: Send {
    fn spec(&self) -> EnvSpec;

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;

    /// Advances one step. The action must lie in [−1, 1]^act_dim (the
    /// harness clips gaussian samples before they get here) and the
    /// episode must not already be finished.
    fn step(&mut self, action: &[f64]) -> CoreResult<StepResult>;
}

/// Canonical environment ids, in registry order.
pub const ENV_IDS: [&str; 3] = ["bimodal-bandit", "pointmass-reacher", "pendulum-swingup"];

/// Instantiates a registered environment by id.
pub fn make_env(id: &str) -> CoreResult<Box<dyn Environment>> {
    match id {
        "bimodal-bandit" => Ok(Box::new(BimodalBandit::new())),
        "pointmass-reacher" => Ok(Box::new(PointMassReacher::new())),
        "pendulum-swingup" => Ok(Box::new(PendulumSwingup::new())),
        _ => Err(CoreError::invalid_config(format!(
            "unknown environment '{id}' (expected one of {})",
            ENV_IDS.join(", ")
        ))),
    }
}

/// Shared precondition check for `step`.
pub(crate) fn check_action(action: &[f64], act_dim: usize) -> CoreResult<()> {
    if action.len() != act_dim {
        return Err(CoreError::contract(format!(
            "action has {} entries, environment takes {act_dim}",
            action.len()
        )));
    }
    for (i, &a) in action.iter().enumerate() {
        if !(-1.0..=1.0).contains(&a) {
            return Err(CoreError::contract(format!(
                "action component {i} = {a} outside [-1, 1]"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngstream::{rng_for, stream};
    use rand::Rng as _;

    #[test]
    fn registry_knows_exactly_the_documented_ids() {
        for id in ENV_IDS {
            let env = make_env(id).unwrap();
            assert_eq!(env.spec().id, id);
        }
        assert!(matches!(
            make_env("cartpole"),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn specs_are_internally_consistent() {
        for id in ENV_IDS {
            let env = make_env(id).unwrap();
            let spec = env.spec();
            assert!(spec.act_dim >= 1);
            assert!(spec.horizon >= 1);
            assert!(spec.obs_dim >= 1);
            assert!(spec.min_return.is_finite());
        }
    }

    #[test]
    fn episodes_run_exactly_to_horizon_and_stay_finite() {
        for id in ENV_IDS {
            let mut env = make_env(id).unwrap();
            let spec = env.spec();
            let mut rng = rng_for(0, stream::ENV);
            let obs = env.reset(&mut rng);
            assert_eq!(obs.len(), spec.obs_dim);
            let mut ret = 0.0;
            for t in 0..spec.horizon {
                let action: Vec<f64> =
                    (0..spec.act_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = env.step(&action).unwrap();
                assert_eq!(r.obs.len(), spec.obs_dim);
                assert!(r.obs.iter().all(|v| v.is_finite()), "{id}");
                assert!(r.reward.is_finite(), "{id}");
                assert_eq!(r.done, t + 1 == spec.horizon, "{id} step {t}");
                ret += r.reward;
            }
            assert!(
                ret >= spec.min_return,
                "{id}: return {ret} below declared minimum {}",
                spec.min_return
            );
            // stepping past the horizon is a caller bug
            let action = vec![0.0; spec.act_dim];
            assert!(env.step(&action).is_err(), "{id}");
        }
    }

    #[test]
    fn identical_seeds_replay_identical_trajectories() {
        for id in ENV_IDS {
            let run = |seed: u64| {
                let mut env = make_env(id).unwrap();
                let mut rng = rng_for(seed, stream::ENV);
                let mut trace = env.reset(&mut rng);
                let spec = env.spec();
                let mut action_rng = rng_for(seed, stream::SAMPLE);
                for _ in 0..spec.horizon {
                    let action: Vec<f64> = (0..spec.act_dim)
                        .map(|_| action_rng.gen_range(-1.0..1.0))
                        .collect();
                    let r = env.step(&action).unwrap();
                    trace.extend(r.obs);
                    trace.push(r.reward);
                }
                trace
            };
            assert_eq!(run(9), run(9), "{id}");
            assert_ne!(run(9), run(10), "{id} should vary with the seed");
        }
    }

    #[test]
    fn out_of_range_actions_are_rejected() {
        let mut env = make_env("pointmass-reacher").unwrap();
        let mut rng = rng_for(0, stream::ENV);
        env.reset(&mut rng);
        assert!(env.step(&[1.5, 0.0]).is_err());
        assert!(env.step(&[0.0]).is_err());
    }
}
