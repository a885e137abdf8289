//! Score-gradient variance versus atom count.
//!
//! Setup: a single probe state, constant reward R = 1, and a discrete
//! one-dimensional policy with K atoms. For each fresh initialization the
//! scan estimates the variance of the single-sample score gradient
//! `g = R * grad log p(a)` over action draws, restricted to the shared
//! encoder parameters, then averages across initializations. Normalized
//! at the K = 50 anchor this follows the (K-1)/K law: the per-logit score
//! variance at near-uniform probabilities is p_j (1 - p_j), which sums to
//! 1 - 1/K.
//!
//! The estimator is computed from atom draw counts: draws with the same
//! atom contribute the same gradient, so tallying counts and weighting
//! the K per-atom gradient rows reproduces the draw-by-draw sums exactly
//! at a fraction of the cost.

use crate::distributions::{ActionSample, HeadKind, PolicyConfig, PolicyNet};
use crate::environments::make_env;
use crate::error::{CoreError, CoreResult};
use crate::parallel::map_cells;
use crate::rngstream::{cell_seed, rng_for, stream};
use crate::diffmath::Tape;

/// Atom count at which both curves are pinned to 1.0 by default.
pub const DEFAULT_ANCHOR: usize = 50;

#[derive(Clone, Debug)]
pub struct VarianceScanConfig {
    pub k_values: Vec<usize>,
    /// Fresh network initializations averaged per K.
    pub n_inits: usize,
    /// Action draws per initialization.
    pub n_grad_samples: usize,
    /// Normalization anchor; must appear in `k_values`.
    pub anchor: usize,
    /// Encoder widths for the probe policies.
    pub hidden: Vec<usize>,
    pub parallel: bool,
}

impl Default for VarianceScanConfig {
    fn default() -> Self {
        VarianceScanConfig {
            k_values: vec![2, 5, 11, 30, DEFAULT_ANCHOR],
            n_inits: 20,
            n_grad_samples: 10_000,
            anchor: DEFAULT_ANCHOR,
            hidden: vec![32, 32],
            parallel: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VarianceScanResult {
    pub k_values: Vec<usize>,
    /// Mean total encoder-gradient variance per K, anchor-normalized.
    pub empirical_norm: Vec<f64>,
    /// ((K-1)/K) / ((A-1)/A) for anchor A.
    pub theoretical_norm: Vec<f64>,
    /// Unnormalized mean total variance per K.
    pub raw_variance: Vec<f64>,
    pub n_inits: usize,
    pub n_grad_samples: usize,
}

/// Theory curve value for one K, normalized at `anchor`.
pub fn theoretical_normalized(k: usize, anchor: usize) -> f64 {
    let law = |k: usize| (k as f64 - 1.0) / k as f64;
    law(k) / law(anchor)
}

/// Run the scan against the probe state of `env_id` (the environment is
/// reset once for its observation and never stepped; the reward is the
/// constant 1). All randomness derives from `seed`.
pub fn variance_scan(
    env_id: &str,
    cfg: &VarianceScanConfig,
    seed: u64,
) -> CoreResult<VarianceScanResult> {
    if cfg.n_inits < 1 || cfg.n_grad_samples < 2 {
        return Err(CoreError::invalid_config(
            "variance scan needs n_inits >= 1 and n_grad_samples >= 2",
        ));
    }
    if !cfg.k_values.contains(&cfg.anchor) {
        return Err(CoreError::invalid_config(format!(
            "anchor K={} missing from scanned K values {:?}",
            cfg.anchor, cfg.k_values
        )));
    }
    let mut env = make_env(env_id)?;
    let probe_obs = env.reset(&mut rng_for(seed, stream::ENV));

    // One cell per (K, init); cell seeds are independent of list order.
    let n_k = cfg.k_values.len();
    let cells = n_k * cfg.n_inits;
    let per_cell: Vec<CoreResult<f64>> = map_cells(cells, cfg.parallel, |cell| {
        let k = cfg.k_values[cell / cfg.n_inits];
        single_init_variance(
            &probe_obs,
            k,
            &cfg.hidden,
            cfg.n_grad_samples,
            cell_seed(seed, cell as u64),
        )
    });

    let mut raw_variance = Vec::with_capacity(n_k);
    for (ki, _) in cfg.k_values.iter().enumerate() {
        let mut total = 0.0;
        for init in 0..cfg.n_inits {
            total += per_cell[ki * cfg.n_inits + init].as_ref().map_err(clone_err)?;
        }
        raw_variance.push(total / cfg.n_inits as f64);
    }
    let anchor_idx = cfg
        .k_values
        .iter()
        .position(|&k| k == cfg.anchor)
        .expect("anchor checked above");
    let anchor_raw = raw_variance[anchor_idx];
    if !(anchor_raw > 0.0) {
        return Err(CoreError::numeric(format!(
            "anchor variance {anchor_raw} not positive; cannot normalize"
        )));
    }
    Ok(VarianceScanResult {
        empirical_norm: raw_variance.iter().map(|v| v / anchor_raw).collect(),
        theoretical_norm: cfg
            .k_values
            .iter()
            .map(|&k| theoretical_normalized(k, cfg.anchor))
            .collect(),
        raw_variance,
        k_values: cfg.k_values.clone(),
        n_inits: cfg.n_inits,
        n_grad_samples: cfg.n_grad_samples,
    })
}

fn clone_err(e: &CoreError) -> CoreError {
    CoreError::numeric(format!("variance scan cell failed: {e}"))
}

/// Total encoder-parameter variance of the score gradient for one fresh
/// initialization: sum over encoder coordinates of the per-coordinate
/// empirical variance across `n_draws` atom draws.
fn single_init_variance(
    probe_obs: &[f64],
    k: usize,
    hidden: &[usize],
    n_draws: usize,
    seed: u64,
) -> CoreResult<f64> {
    let policy_cfg = PolicyConfig {
        obs_dim: probe_obs.len(),
        act_dim: 1,
        hidden: hidden.to_vec(),
        head: HeadKind::Discrete,
        bins: Some(k),
    };
    let policy = PolicyNet::init(&mut rng_for(seed, stream::POLICY_INIT), &policy_cfg)?;
    let n_enc = policy.encoder_param_count();
    let params = policy.flatten();

    // Per-atom encoder gradients of log p(atom).
    let grid = policy.grid().expect("discrete policy has a grid").clone();
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(k);
    for atom in 0..k {
        let sample = ActionSample {
            continuous: vec![grid.atom(atom)],
            raw: vec![grid.atom(atom)],
            atom_indices: Some(vec![atom]),
            behavior_log_prob: 0.0,
        };
        let mut tape: Tape<f64> = Tape::new();
        let flat = tape.leaf_f64(params.as_slice());
        let nodes = policy.carve(&mut tape, flat);
        let lp = policy.log_prob_node(&mut tape, &nodes, probe_obs, &sample);
        let adj = tape.backward(lp);
        grads.push(adj.grad(flat)[..n_enc].to_vec());
    }

    // Draw atoms, reduce to counts.
    let dist = policy.distribution(probe_obs)?;
    let mut counts = vec![0usize; k];
    let mut rng = rng_for(seed, stream::SAMPLE);
    for _ in 0..n_draws {
        let s = dist.sample(&mut rng)?;
        counts[s.atom_indices.as_ref().expect("atomic")[0]] += 1;
    }

    // Per-coordinate variance from count-weighted first and second moments.
    let n = n_draws as f64;
    let mut total_var = 0.0;
    for i in 0..n_enc {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for atom in 0..k {
            if counts[atom] == 0 {
                continue;
            }
            let c = counts[atom] as f64;
            let g = grads[atom][i];
            s1 += c * g;
            s2 += c * g * g;
        }
        let mean = s1 / n;
        total_var += s2 / n - mean * mean;
    }
    if !total_var.is_finite() {
        return Err(CoreError::numeric("score-gradient variance non-finite"));
    }
    Ok(total_var)
}

/// Convenience used by property tests: draw-count doubling stability.
pub fn variance_at(
    env_id: &str,
    k: usize,
    n_inits: usize,
    n_grad_samples: usize,
    hidden: &[usize],
    seed: u64,
) -> CoreResult<f64> {
    let mut env = make_env(env_id)?;
    let probe_obs = env.reset(&mut rng_for(seed, stream::ENV));
    let mut total = 0.0;
    for init in 0..n_inits {
        total += single_init_variance(
            &probe_obs,
            k,
            hidden,
            n_grad_samples,
            cell_seed(seed, init as u64),
        )?;
    }
    Ok(total / n_inits as f64)
}
