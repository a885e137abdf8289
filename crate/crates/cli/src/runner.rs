//! Single-run execution shared by `train` and `bandit-demo`: drive a
//! trainer to its step budget, keep the final policy for density dumps,
//! and fold any failure into data instead of aborting sibling runs.

use atomrl_core::distributions::{ActionSample, HeadKind, PolicyConfig, PolicyNet};
use atomrl_core::environments::make_env;
use atomrl_core::error::CoreResult;
use atomrl_core::onpolicy::{AlgoConfig, IterationDiagnostics, Trainer};
use atomrl_core::rngstream::{rng_for, stream};
use std::fmt::Write as _;

/// Points in the action-density grid over [−1, 1].
pub const DENSITY_GRID_POINTS: usize = 1001;

/// Everything one seed's training produced.
pub struct CompletedRun {
    pub history: Vec<IterationDiagnostics>,
    pub terminated_early: bool,
    pub failure: Option<String>,
    pub final_policy: PolicyNet,
}

impl CompletedRun {
    pub fn final_mean_return(&self) -> Option<f64> {
        self.history.last().map(|d| d.mean_return)
    }
}

/// Trains one seed to `total_steps` environment steps. Numeric failures
/// come back inside the run (partial history retained, `terminated_early`
/// set); only configuration and contract errors are `Err`.
pub fn execute_run(
    env_id: &str,
    policy_cfg: &PolicyConfig,
    algo_cfg: AlgoConfig,
    seed: u64,
    total_steps: usize,
) -> CoreResult<CompletedRun> {
    let mut trainer = Trainer::new(env_id, policy_cfg, algo_cfg, seed)?;
    let outcome = trainer.run(total_steps, |_| {})?;
    Ok(CompletedRun {
        history: outcome.history,
        terminated_early: outcome.terminated_early,
        failure: outcome.failure,
        final_policy: trainer.policy().clone(),
    })
}

/// Renders the policy's action density at the environment's initial
/// observation on an even grid over [−1, 1] (columns `action,density`).
/// Atomic heads report the piecewise-constant histogram density: the
/// nearest atom's mass divided by its cell width, where the two edge
/// atoms own half-width cells, so the rows always integrate to about
/// one. Continuous heads report the exact density at each grid point.
pub fn density_csv(policy: &PolicyNet, env_id: &str, seed: u64) -> CoreResult<String> {
    let mut env = make_env(env_id)?;
    let obs = env.reset(&mut rng_for(seed, stream::ENV));
    let dist = policy.distribution(&obs)?;
    if dist.act_dim() != 1 {
        return Err(atomrl_core::error::CoreError::contract(
            "density dumps support one-dimensional action spaces only",
        ));
    }
    let mut out = String::from("action,density\n");
    for i in 0..DENSITY_GRID_POINTS {
        let action = -1.0 + 2.0 * i as f64 / (DENSITY_GRID_POINTS - 1) as f64;
        let density = match policy.head() {
            HeadKind::Discrete | HeadKind::Ordinal => {
                let grid = dist.grid().expect("atomic head has a grid");
                let atom = grid.nearest(action);
                let sample = ActionSample {
                    continuous: vec![grid.atom(atom)],
                    raw: vec![grid.atom(atom)],
                    atom_indices: Some(vec![atom]),
                    behavior_log_prob: 0.0,
                };
                let cell_width = if atom == 0 || atom == grid.bins() - 1 {
                    0.5 * grid.spacing()
                } else {
                    grid.spacing()
                };
                dist.log_prob(&sample)?.exp() / cell_width
            }
            HeadKind::Gaussian | HeadKind::GaussianTanh | HeadKind::Beta => {
                let sample = ActionSample {
                    continuous: vec![action],
                    raw: vec![action],
                    atom_indices: None,
                    behavior_log_prob: 0.0,
                };
                dist.log_prob(&sample)?.exp()
            }
        };
        writeln!(out, "{action},{density}").expect("string writes cannot fail");
    }
    Ok(out)
}
