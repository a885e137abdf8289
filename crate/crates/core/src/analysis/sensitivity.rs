//! Hyperparameter-sensitivity scan: final return quantiles per head under
//! randomly drawn learning rates.
//!
//! Each draw samples log10(lr) uniformly from [-6, -3], a training seed
//! uniformly from five, and an atom count uniformly from {7, 11, 15} when
//! the head is atomic, then trains with an otherwise shared
//! configuration. Runs that fail numerically score the environment's
//! minimum return, so fragile settings drag the low quantiles down
//! instead of vanishing from the summary.

use crate::distributions::{HeadKind, PolicyConfig};
use crate::environments::make_env;
use crate::error::{CoreError, CoreResult};
use crate::onpolicy::{AlgoConfig, Trainer};
use crate::parallel::map_cells;
use crate::rngstream::{cell_seed, rng_for, stream};
use rand::Rng as _;

/// log10 learning-rate range sampled by every draw.
pub const LOG10_LR_RANGE: (f64, f64) = (-6.0, -3.0);
/// Training seeds a draw may pick from.
pub const SEED_POOL: u64 = 5;
/// Atom counts a draw may pick from for atomic heads.
pub const K_POOL: [usize; 3] = [7, 11, 15];

#[derive(Clone, Debug)]
pub struct SensitivityScanConfig {
    pub heads: Vec<HeadKind>,
    pub n_draws: usize,
    pub algo: AlgoConfig,
    pub hidden: Vec<usize>,
    pub total_steps: usize,
    pub parallel: bool,
}

#[derive(Clone, Debug)]
pub struct SensitivityDraw {
    pub head: HeadKind,
    pub log10_lr: f64,
    pub seed: u64,
    /// Atom count; `None` for continuous heads.
    pub k: Option<usize>,
    /// Final windowed mean return, or the environment minimum when the
    /// run failed.
    pub final_return: f64,
    pub failed: bool,
}

#[derive(Clone, Debug)]
pub struct SensitivitySummary {
    pub head: HeadKind,
    pub draws: Vec<SensitivityDraw>,
    /// Final-return quantiles at 0/25/50/75/100 percent.
    pub quantiles: [f64; 5],
}

/// Linear-interpolation quantile (the common "type 7" rule) of already
/// sorted data; `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

/// Run the scan on `env_id`; all draw randomness derives from `seed`.
pub fn sensitivity_scan(
    env_id: &str,
    cfg: &SensitivityScanConfig,
    seed: u64,
) -> CoreResult<Vec<SensitivitySummary>> {
    if cfg.heads.is_empty() || cfg.n_draws == 0 || cfg.total_steps == 0 {
        return Err(CoreError::invalid_config(
            "sensitivity scan needs heads, draws, and a positive step budget",
        ));
    }
    let spec = make_env(env_id)?.spec();
    let n = cfg.n_draws;

    let all_draws: Vec<SensitivityDraw> =
        map_cells(cfg.heads.len() * n, cfg.parallel, |cell| {
            let head = cfg.heads[cell / n];
            run_draw(env_id, head, cfg, spec.min_return, cell_seed(seed, cell as u64))
        });

    Ok(cfg
        .heads
        .iter()
        .enumerate()
        .map(|(hi, &head)| {
            let draws = all_draws[hi * n..(hi + 1) * n].to_vec();
            let mut finals: Vec<f64> = draws.iter().map(|d| d.final_return).collect();
            finals.sort_by(|a, b| a.total_cmp(b));
            let quantiles =
                [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile_sorted(&finals, q));
            SensitivitySummary {
                head,
                draws,
                quantiles,
            }
        })
        .collect())
}

fn run_draw(
    env_id: &str,
    head: HeadKind,
    cfg: &SensitivityScanConfig,
    min_return: f64,
    draw_seed: u64,
) -> SensitivityDraw {
    let mut rng = rng_for(draw_seed, stream::SCAN);
    let log10_lr = rng.gen_range(LOG10_LR_RANGE.0..=LOG10_LR_RANGE.1);
    let seed = rng.gen_range(0..SEED_POOL);
    let k = if head.is_atomic() {
        Some(K_POOL[rng.gen_range(0..K_POOL.len())])
    } else {
        None
    };

    let mut draw = SensitivityDraw {
        head,
        log10_lr,
        seed,
        k,
        final_return: min_return,
        failed: true,
    };
    let spec = match make_env(env_id) {
        Ok(env) => env.spec(),
        Err(_) => return draw,
    };
    let policy_cfg = PolicyConfig {
        obs_dim: spec.obs_dim,
        act_dim: spec.act_dim,
        hidden: cfg.hidden.clone(),
        head,
        bins: k,
    };
    let mut algo = cfg.algo.clone();
    algo.learning_rate = 10f64.powf(log10_lr);
    let outcome = Trainer::new(env_id, &policy_cfg, algo, seed).and_then(|mut t| t.run(cfg.total_steps, |_| {}));
    match outcome {
        Ok(out) => {
            let fin = out.final_mean_return().unwrap_or(min_return);
            if fin.is_finite() && !out.terminated_early {
                draw.final_return = fin;
                draw.failed = false;
            } else if fin.is_finite() {
                // Partial progress before an early stop still counts as a
                // failure for the summary, scored at the sentinel.
                draw.failed = true;
            }
        }
        Err(_) => {}
    }
    draw
}
