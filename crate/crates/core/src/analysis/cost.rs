//! Wall-clock training cost of discretized heads relative to a gaussian
//! baseline.
//!
//! Each entry times a full training loop (collection plus updates) for a
//! fixed environment-step budget on one thread. Trials run round-robin
//! across heads so slow drift in machine load spreads evenly, and each
//! head's time is the median across repeats. The gaussian baseline is
//! reported as exactly 100%.

use crate::distributions::{HeadKind, PolicyConfig};
use crate::environments::make_env;
use crate::error::{CoreError, CoreResult};
use crate::onpolicy::{AlgoConfig, Trainer};
use crate::rngstream::derive_seed;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct CostScanConfig {
    /// Atom counts for the discrete entries; the gaussian baseline is
    /// always included.
    pub k_values: Vec<usize>,
    pub algo: AlgoConfig,
    pub hidden: Vec<usize>,
    /// Environment steps trained per timed trial.
    pub steps_per_trial: usize,
    /// Timed trials per head; the median is reported.
    pub repeats: usize,
}

#[derive(Clone, Debug)]
pub struct CostEntry {
    /// `None` marks the gaussian baseline row.
    pub k: Option<usize>,
    pub label: String,
    /// Median wall-clock milliseconds across repeats.
    pub wall_ms: f64,
    /// Relative to the gaussian baseline; the baseline row is exactly 100.
    pub percent: f64,
}

#[derive(Clone, Debug)]
pub struct CostScanResult {
    pub entries: Vec<CostEntry>,
    pub steps_per_trial: usize,
    pub repeats: usize,
}

/// Time each head on `env_id`. Runs strictly on the calling thread.
pub fn cost_scan(env_id: &str, cfg: &CostScanConfig, seed: u64) -> CoreResult<CostScanResult> {
    if cfg.k_values.is_empty() || cfg.steps_per_trial == 0 || cfg.repeats == 0 {
        return Err(CoreError::invalid_config(
            "cost scan needs K values, a positive step budget, and repeats",
        ));
    }
    let spec = make_env(env_id)?.spec();
    let heads: Vec<Option<usize>> = std::iter::once(None)
        .chain(cfg.k_values.iter().map(|&k| Some(k)))
        .collect();

    let mut times: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.repeats); heads.len()];
    for rep in 0..cfg.repeats {
        for (hi, &bins) in heads.iter().enumerate() {
            let policy_cfg = PolicyConfig {
                obs_dim: spec.obs_dim,
                act_dim: spec.act_dim,
                hidden: cfg.hidden.clone(),
                head: if bins.is_some() {
                    HeadKind::Discrete
                } else {
                    HeadKind::Gaussian
                },
                bins,
            };
            let trial_seed = derive_seed(seed, (rep * heads.len() + hi) as u64);
            let mut trainer = Trainer::new(env_id, &policy_cfg, cfg.algo.clone(), trial_seed)?;
            let start = Instant::now();
            trainer.run(cfg.steps_per_trial, |_| {})?;
            times[hi].push(start.elapsed().as_secs_f64() * 1e3);
        }
    }

    let medians: Vec<f64> = times.iter().map(|t| median(t)).collect();
    let baseline = medians[0];
    if !(baseline > 0.0) {
        return Err(CoreError::numeric("baseline trial took zero time"));
    }
    let entries = heads
        .iter()
        .zip(&medians)
        .map(|(&k, &wall_ms)| CostEntry {
            k,
            label: match k {
                None => "gaussian".to_string(),
                Some(k) => format!("discrete-{k}"),
            },
            wall_ms,
            percent: match k {
                None => 100.0,
                Some(_) => 100.0 * wall_ms / baseline,
            },
        })
        .collect();
    Ok(CostScanResult {
        entries,
        steps_per_trial: cfg.steps_per_trial,
        repeats: cfg.repeats,
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
