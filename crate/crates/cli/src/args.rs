//! Command-line surface: subcommands, flags, and the seed-list grammar.
//!
//! Flags that name algorithm hyperparameters are optional overrides over
//! the per-algorithm defaults; validation happens in `commands`, where a
//! bad combination becomes a configuration error (exit code 2) with a
//! message naming the offending flag.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "atomrl",
    version,
    about = "On-policy policy-gradient experiments over interchangeable action heads",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train one configuration across seeds; writes one learning-curve CSV
    /// (steps,mean_return,std_return,kl,clip_frac,wall_ms) and one JSON
    /// manifest per seed
    Train(TrainArgs),
    /// Train discrete (11 atoms) and gaussian policies on the bimodal
    /// bandit across seeds; writes learning curves plus final policy
    /// densities on a 1001-point action grid
    BanditDemo(BanditDemoArgs),
    /// Measure normalized encoder-gradient variance against atom count;
    /// writes variance.csv (K,empirical_norm,theoretical_norm,raw_variance)
    VarianceScan(VarianceScanArgs),
    /// Train discrete policies over an atom-count grid and seed list;
    /// writes capacity.csv (K,seed,final_return,terminated_early) and
    /// capacity_summary.csv (K,mean_final_return)
    CapacityScan(CapacityScanArgs),
    /// Time training cost per head against the gaussian baseline on one
    /// thread; writes cost.csv (label,bins,median_wall_ms,percent) with
    /// the baseline row pinned at 100
    CostScan(CostScanArgs),
    /// Sample hyperparameters per head and train each draw; writes
    /// sensitivity_draws.csv (one row per draw) and
    /// sensitivity_quantiles.csv (head,q0,q25,q50,q75,q100)
    Sensitivity(SensitivityArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Environment id: bimodal-bandit, pointmass-reacher, or
    /// pendulum-swingup
    #[arg(long)]
    pub env: String,

    /// Algorithm: ppo, trpo, or vpg
    #[arg(long, default_value = "ppo")]
    pub algo: String,

    /// Policy head: gaussian, gaussian_tanh, beta, discrete, or ordinal
    #[arg(long, default_value = "gaussian")]
    pub head: String,

    /// Atom count per action dimension; required for discrete/ordinal
    /// heads and invalid for the others
    #[arg(long)]
    pub bins: Option<usize>,

    /// Learning rate override (ppo and vpg only; trpo takes --delta)
    #[arg(long)]
    pub lr: Option<f64>,

    /// Trust-region KL bound override (trpo only; ppo and vpg take --lr)
    #[arg(long)]
    pub delta: Option<f64>,

    /// Total environment steps per seed
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,

    /// Seeds to run: "7", "0,2,9", or an inclusive range "0..4"; comma
    /// tokens may mix both forms
    #[arg(long, default_value = "0")]
    pub seeds: String,

    /// Output directory; created if missing, and the only place the
    /// harness writes
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads for independent seeds (1 runs them sequentially)
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,

    /// Discount factor override
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Advantage-estimation lambda override
    #[arg(long)]
    pub lam: Option<f64>,

    /// Ratio clip radius override (ppo only)
    #[arg(long)]
    pub clip: Option<f64>,

    /// Entropy bonus coefficient override
    #[arg(long)]
    pub entropy_coef: Option<f64>,
}

#[derive(Args)]
pub struct BanditDemoArgs {
    /// Total environment steps per run
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,

    /// Seeds trained for each of the two heads
    #[arg(long, default_value = "0..4")]
    pub seeds: String,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads for independent runs
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Args)]
pub struct VarianceScanArgs {
    /// Environment supplying the probe observation
    #[arg(long, default_value = "bimodal-bandit")]
    pub env: String,

    /// Atom counts to scan (comma-separated); the largest is the
    /// normalization anchor
    #[arg(long, default_value = "2,5,11,30,50")]
    pub k_values: String,

    /// Encoder initializations averaged per atom count
    #[arg(long, default_value_t = 20)]
    pub inits: usize,

    /// Policy-gradient samples drawn per initialization
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,

    /// Master seed (exactly one)
    #[arg(long, default_value = "0")]
    pub seeds: String,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads for independent scan cells
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Args)]
pub struct CapacityScanArgs {
    /// Environment to train on
    #[arg(long, default_value = "pendulum-swingup")]
    pub env: String,

    /// Algorithm: ppo, trpo, or vpg
    #[arg(long, default_value = "ppo")]
    pub algo: String,

    /// Atom counts to scan (comma-separated)
    #[arg(long, default_value = "2,11")]
    pub k_values: String,

    /// Training seeds shared across atom counts (paired comparison)
    #[arg(long, default_value = "0..2")]
    pub seeds: String,

    /// Total environment steps per (K, seed) cell
    #[arg(long, default_value_t = 120_000)]
    pub steps: usize,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads for independent cells
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,

    /// Learning rate override
    #[arg(long)]
    pub lr: Option<f64>,

    /// Discount factor override
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Advantage-estimation lambda override
    #[arg(long)]
    pub lam: Option<f64>,

    /// Ratio clip radius override
    #[arg(long)]
    pub clip: Option<f64>,

    /// Entropy bonus coefficient override
    #[arg(long)]
    pub entropy_coef: Option<f64>,
}

#[derive(Args)]
pub struct CostScanArgs {
    /// Environment to train on
    #[arg(long, default_value = "pendulum-swingup")]
    pub env: String,

    /// Atom counts timed against the gaussian baseline (comma-separated)
    #[arg(long, default_value = "5,11,30,100")]
    pub k_values: String,

    /// Environment steps per timed trial
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,

    /// Timed trials per head; the median is reported
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,

    /// Master seed (exactly one)
    #[arg(long, default_value = "0")]
    pub seeds: String,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SensitivityArgs {
    /// Environment to train on
    #[arg(long, default_value = "pendulum-swingup")]
    pub env: String,

    /// Heads to scan (comma-separated)
    #[arg(
        long,
        default_value = "gaussian,gaussian_tanh,beta,discrete,ordinal"
    )]
    pub heads: String,

    /// Hyperparameter draws per head
    #[arg(long, default_value_t = 30)]
    pub draws: usize,

    /// Total environment steps per draw
    #[arg(long, default_value_t = 30_000)]
    pub steps: usize,

    /// Master seed (exactly one)
    #[arg(long, default_value = "0")]
    pub seeds: String,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,

    /// Worker threads for independent draws
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

/// Parses the seed grammar: comma-separated tokens, each either a single
/// non-negative integer or an inclusive range "lo..hi". Duplicates are
/// rejected because seeds name output files.
pub fn parse_seed_list(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds: Vec<u64> = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if let Some((lo, hi)) = token.split_once("..") {
            let lo = parse_integer(lo, token)?;
            let hi = parse_integer(hi, token)?;
            if hi < lo {
                return Err(format!("seed range '{token}' is descending"));
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(parse_integer(token, token)?);
        }
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(format!("seed list '{text}' contains duplicates"));
    }
    Ok(seeds)
}

/// Parses a comma-separated list of positive integers (no ranges), used
/// for atom-count grids.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<usize>()
                .map_err(|_| format!("'{token}' is not a non-negative integer"))
        })
        .collect()
}

fn parse_integer(text: &str, token: &str) -> Result<u64, String> {
    text.trim()
        .parse::<u64>()
        .map_err(|_| format!("seed token '{token}' is not a non-negative integer or lo..hi range"))
}
