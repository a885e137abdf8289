//! Final performance versus atom count for discretized control.
//!
//! Trains one discrete policy per (K, seed) cell with a shared algorithm
//! configuration and records the final windowed mean return. Cells that
//! fail numerically are recorded with the environment's minimum return as
//! a sentinel and the scan continues; nothing in one cell can abort its
//! siblings.

use crate::distributions::{HeadKind, PolicyConfig};
use crate::environments::make_env;
use crate::error::{CoreError, CoreResult};
use crate::onpolicy::{AlgoConfig, Trainer};
use crate::parallel::map_cells;
use crate::rngstream::derive_seed;

#[derive(Clone, Debug)]
pub struct CapacityScanConfig {
    pub k_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algo: AlgoConfig,
    pub hidden: Vec<usize>,
    pub total_steps: usize,
    pub parallel: bool,
}

/// One trained (K, seed) cell.
#[derive(Clone, Debug)]
pub struct CapacityCell {
    pub k: usize,
    pub seed: u64,
    /// Windowed mean return at the end of training; the environment's
    /// minimum return when the run failed.
    pub final_return: f64,
    pub terminated_early: bool,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct CapacityScanResult {
    pub cells: Vec<CapacityCell>,
    /// Mean of `final_return` across seeds, one entry per scanned K.
    pub mean_by_k: Vec<(usize, f64)>,
}

/// Train every (K, seed) cell of the scan on `env_id`.
pub fn capacity_scan(env_id: &str, cfg: &CapacityScanConfig) -> CoreResult<CapacityScanResult> {
    if cfg.k_values.is_empty() || cfg.seeds.is_empty() || cfg.total_steps == 0 {
        return Err(CoreError::invalid_config(
            "capacity scan needs K values, seeds, and a positive step budget",
        ));
    }
    let spec = make_env(env_id)?.spec();
    let n_seeds = cfg.seeds.len();
    let env_id_owned = env_id.to_string();

    let cells: Vec<CapacityCell> = map_cells(cfg.k_values.len() * n_seeds, cfg.parallel, |cell| {
        let k = cfg.k_values[cell / n_seeds];
        let seed = cfg.seeds[cell % n_seeds];
        run_cell(&env_id_owned, k, seed, cfg, spec.min_return)
    });

    let mut mean_by_k = Vec::with_capacity(cfg.k_values.len());
    for (ki, &k) in cfg.k_values.iter().enumerate() {
        let sum: f64 = cells[ki * n_seeds..(ki + 1) * n_seeds]
            .iter()
            .map(|c| c.final_return)
            .sum();
        mean_by_k.push((k, sum / n_seeds as f64));
    }
    Ok(CapacityScanResult { cells, mean_by_k })
}

fn run_cell(
    env_id: &str,
    k: usize,
    seed: u64,
    cfg: &CapacityScanConfig,
    min_return: f64,
) -> CapacityCell {
    let failed = |msg: String| CapacityCell {
        k,
        seed,
        final_return: min_return,
        terminated_early: true,
        failure: Some(msg),
    };
    let spec = match make_env(env_id) {
        Ok(env) => env.spec(),
        Err(e) => return failed(e.to_string()),
    };
    let policy_cfg = PolicyConfig {
        obs_dim: spec.obs_dim,
        act_dim: spec.act_dim,
        hidden: cfg.hidden.clone(),
        head: HeadKind::Discrete,
        bins: Some(k),
    };
    // Same seed across K gives paired comparisons; fold K in where the
    // trainer would otherwise reuse identical streams across cells.
    let trainer_seed = derive_seed(seed, k as u64);
    let mut trainer = match Trainer::new(env_id, &policy_cfg, cfg.algo.clone(), trainer_seed) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    match trainer.run(cfg.total_steps, |_| {}) {
        Ok(outcome) => {
            let final_return = outcome.final_mean_return().unwrap_or(min_return);
            CapacityCell {
                k,
                seed,
                final_return: if final_return.is_finite() {
                    final_return
                } else {
                    min_return
                },
                terminated_early: outcome.terminated_early,
                failure: outcome.failure,
            }
        }
        Err(e) => failed(e.to_string()),
    }
}
