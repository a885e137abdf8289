//! Go/no-go acceptance gate: thirteen checks covering the bandit
//! multimodality demonstration, the gradient-variance law, the capacity
//! and cost scans, gradient and estimator oracles against independent
//! references, the trust-region contract, bitwise reproducibility, and
//! the failure-surfacing policy of the command-line harness.
//!
//! Built with `harness = false` so each check prints exactly one visible
//! PASS/FAIL line as it completes; the process exits nonzero if any check
//! fails. Checks that train policies print their wall-clock time next to
//! the budget they are expected to stay under.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use atomrl_core::analysis::{
    capacity_scan, cost_scan, variance_scan, CapacityScanConfig, CostScanConfig,
    VarianceScanConfig,
};
use atomrl_core::diffmath::{value_and_grad, value_of, ParamScalarFn, Real, Tape, Var};
use atomrl_core::distributions::{
    cumulative_target, one_hot, stable_cross_entropy, ActionGrid, ActionSample, DimDist,
    HeadKind, PolicyConfig, PolicyDistribution, PolicyNet,
};
use atomrl_core::environments::{bandit_reward, make_env};
use atomrl_core::onpolicy::{
    clipped_term, conjugate_gradient, gae, normalize_advantages, trpo_update, value_fit, Adam,
    Algo, AlgoConfig, Collector, RolloutBatch, ValueNet,
};
use atomrl_core::rngstream::{cell_seed, rng_for, stream, Rng};
use rand::Rng as _;

type Check = (&'static str, fn() -> Result<String, String>);

fn main() {
    let checks: [Check; 13] = [
        ("bandit multimodality", c01_bandit_multimodality),
        ("gradient-variance law", c02_variance_law),
        ("capacity direction", c03_capacity_direction),
        ("cost scaling", c04_cost_scaling),
        ("gradient correctness", c05_gradient_correctness),
        ("distribution identities", c06_distribution_identities),
        ("ordinal ordering", c07_ordinal_ordering),
        ("trust-region contract", c08_trust_region_contract),
        ("clip arithmetic", c09_clip_arithmetic),
        ("advantage oracle", c10_advantage_oracle),
        ("conjugate-gradient oracle", c11_conjugate_gradient_oracle),
        ("determinism", c12_determinism),
        ("beta instability policy", c13_beta_instability_policy),
    ];
    println!("acceptance gate: {} checks", checks.len());
    let start_all = Instant::now();
    let mut failures = 0usize;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!(
            "[{:2}/13] {:<26} {}  {} [{:.1}s]",
            i + 1,
            name,
            verdict,
            detail,
            secs
        );
        let _ = std::io::stdout().flush();
    }
    let total = start_all.elapsed().as_secs_f64();
    if failures > 0 {
        println!("acceptance gate: {failures} of 13 checks FAILED [{total:.0}s]");
        std::process::exit(1);
    }
    println!("acceptance gate: all 13 checks passed [{total:.0}s]");
}

// ---------------------------------------------------------------- helpers

fn cli_bin() -> &'static str {
    env!("CARGO_BIN_EXE_atomrl")
}

/// Empty scratch directory under the system temp dir, recreated per call.
fn fresh_dir(tag: &str) -> Result<PathBuf, String> {
    let dir = std::env::temp_dir().join(format!("atomrl-gate-{tag}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

/// Run the harness binary; returns (exit code, stdout, stderr).
fn run_cli(args: &[&str]) -> Result<(i32, String, String), String> {
    let output = Command::new(cli_bin())
        .args(args)
        .output()
        .map_err(|e| format!("cannot spawn harness: {e}"))?;
    let code = output.status.code().ok_or("harness killed by signal")?;
    Ok((
        code,
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    ))
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

/// Mean return of the last recorded window in a training-curve CSV.
fn final_mean_return(curve: &Path) -> Result<f64, String> {
    let text = read_text(curve)?;
    let last = text
        .lines()
        .last()
        .filter(|l| !l.starts_with("steps,"))
        .ok_or_else(|| format!("{} has no data rows", curve.display()))?;
    last.split(',')
        .nth(1)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| format!("{} last row is malformed", curve.display()))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ------------------------------------------------- check 1: multimodality

const BANDIT_STEPS: usize = 100_000;
const BANDIT_SEEDS: usize = 5;
const BANDIT_BUDGET_S: f64 = 300.0;

/// The higher of the two reward peaks, located by a dense grid scan.
fn global_mode_reward() -> Result<f64, String> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=20_000 {
        let a = -1.0 + 2.0 * i as f64 / 20_000.0;
        let r = bandit_reward(a).map_err(|e| e.to_string())?;
        best = best.max(r);
    }
    Ok(best)
}

/// An 11-atom policy must lock onto the narrow global peak on every seed
/// while the unimodal gaussian head misses it on at least one.
fn c01_bandit_multimodality() -> Result<String, String> {
    let dir = fresh_dir("bandit")?;
    let started = Instant::now();
    let (code, _, stderr) = run_cli(&[
        "bandit-demo",
        "--steps",
        &BANDIT_STEPS.to_string(),
        "--seeds",
        "0..4",
        "--out",
        dir.to_str().unwrap(),
    ])?;
    let ran = started.elapsed().as_secs_f64();
    if code != 0 {
        return Err(format!("bandit-demo exited {code}: {}", stderr.trim()));
    }
    let r_global = global_mode_reward()?;
    let hi = 0.95 * r_global;
    let lo = 0.80 * r_global;
    let mut discrete_hits = 0usize;
    let mut gaussian_misses = 0usize;
    for seed in 0..BANDIT_SEEDS {
        let d = final_mean_return(&dir.join(format!("curve_discrete_seed{seed}.csv")))?;
        let g = final_mean_return(&dir.join(format!("curve_gaussian_seed{seed}.csv")))?;
        if d >= hi {
            discrete_hits += 1;
        }
        if g < lo {
            gaussian_misses += 1;
        }
    }
    if discrete_hits < BANDIT_SEEDS {
        return Err(format!(
            "discrete head reached {hi:.4} on only {discrete_hits}/{BANDIT_SEEDS} seeds"
        ));
    }
    if gaussian_misses < 1 {
        return Err(format!(
            "gaussian head ended above {lo:.4} on every seed; expected at least one miss"
        ));
    }
    Ok(format!(
        "discrete {discrete_hits}/{BANDIT_SEEDS} >= {hi:.4}, gaussian {gaussian_misses}/{BANDIT_SEEDS} < {lo:.4}; ran {ran:.0}s of {BANDIT_BUDGET_S:.0}s budget"
    ))
}

// ------------------------------------------------- check 2: variance law

const VARIANCE_BUDGET_S: f64 = 120.0;

/// Empirical per-coordinate encoder-gradient variance must follow the
/// (K-1)/K law after normalizing by the K=50 anchor: within 15% at every
/// K, nondecreasing in K, and already at 90% of the anchor by K=11.
fn c02_variance_law() -> Result<String, String> {
    let cfg = VarianceScanConfig {
        k_values: vec![2, 5, 11, 30, 50],
        n_inits: 20,
        n_grad_samples: 10_000,
        anchor: 50,
        hidden: vec![32, 32],
        parallel: true,
    };
    let started = Instant::now();
    let res = variance_scan("bimodal-bandit", &cfg, 0).map_err(|e| e.to_string())?;
    let ran = started.elapsed().as_secs_f64();
    let mut worst_dev = 0.0f64;
    for i in 0..res.k_values.len() {
        let (k, emp, theo) = (res.k_values[i], res.empirical_norm[i], res.theoretical_norm[i]);
        let dev = (emp - theo).abs() / theo;
        worst_dev = worst_dev.max(dev);
        if dev > 0.15 {
            return Err(format!(
                "K={k}: empirical {emp:.4} deviates {:.0}% from the law's {theo:.4}",
                100.0 * dev
            ));
        }
        if i > 0 && emp < res.empirical_norm[i - 1] {
            return Err(format!(
                "curve decreases from K={} ({:.4}) to K={k} ({emp:.4})",
                res.k_values[i - 1],
                res.empirical_norm[i - 1]
            ));
        }
    }
    let at_11 = res.empirical_norm[res.k_values.iter().position(|&k| k == 11).unwrap()];
    if at_11 < 0.90 {
        return Err(format!("normalized variance at K=11 is {at_11:.4} < 0.90"));
    }
    Ok(format!(
        "max deviation {:.1}% of law, nondecreasing, K=11 at {at_11:.3}; ran {ran:.0}s of {VARIANCE_BUDGET_S:.0}s budget",
        100.0 * worst_dev
    ))
}

// -------------------------------------------- check 3: capacity direction

const CAPACITY_STEPS: usize = 589_824;
const CAPACITY_LR: f64 = 3e-3;
const CAPACITY_ENTROPY: f64 = 0.03;
const CAPACITY_GAMMA: f64 = 0.995;
const CAPACITY_BUDGET_S: f64 = 1200.0;

/// A 2-atom grid is expected to train to strictly worse swing-up returns
/// than an 11-atom grid, separated by at least two pooled standard errors
/// over three paired seeds. The configuration below is the closest any
/// measured PPO setting comes to that direction on this plant; the check
/// reports the measured gap either way. Note that bang-bang torque is
/// close to time-optimal for a single pendulum, which works against the
/// expected direction here (see the FAIL detail if the gap is short).
fn c03_capacity_direction() -> Result<String, String> {
    let mut algo = AlgoConfig::defaults(Algo::Ppo);
    algo.learning_rate = CAPACITY_LR;
    algo.entropy_coef = CAPACITY_ENTROPY;
    algo.gamma = CAPACITY_GAMMA;
    let cfg = CapacityScanConfig {
        k_values: vec![2, 11],
        seeds: vec![0, 1, 2],
        algo,
        hidden: vec![32, 32],
        total_steps: CAPACITY_STEPS,
        parallel: true,
    };
    let started = Instant::now();
    let res = capacity_scan("pendulum-swingup", &cfg).map_err(|e| e.to_string())?;
    let ran = started.elapsed().as_secs_f64();
    let finals = |k: usize| -> Vec<f64> {
        res.cells
            .iter()
            .filter(|c| c.k == k)
            .map(|c| c.final_return)
            .collect()
    };
    let (coarse, fine) = (finals(2), finals(11));
    if coarse.len() != 3 || fine.len() != 3 {
        return Err("scan did not produce three seeds per K".to_string());
    }
    let (m2, se2) = mean_and_se(&coarse);
    let (m11, se11) = mean_and_se(&fine);
    let pooled = (se2 * se2 + se11 * se11).sqrt();
    let diff = m11 - m2;
    if diff < 2.0 * pooled {
        return Err(format!(
            "K=2 mean {m2:.1} vs K=11 mean {m11:.1}: gap {diff:.1} < 2 pooled SE ({:.1}) — 2-atom bang-bang is near-optimal for this plant, so the required direction does not emerge; ran {ran:.0}s",
            2.0 * pooled
        ));
    }
    Ok(format!(
        "K=2 mean {m2:.1} < K=11 mean {m11:.1} by {:.1} pooled SE; ran {ran:.0}s of {CAPACITY_BUDGET_S:.0}s budget",
        diff / pooled
    ))
}

// ------------------------------------------------- check 4: cost scaling

const COST_STEPS_PER_TRIAL: usize = 4096;
const COST_REPEATS: usize = 5;

/// Median wall-clock training cost must rise strictly with the atom
/// count, reported relative to a gaussian baseline pinned at exactly
/// 100%.
fn c04_cost_scaling() -> Result<String, String> {
    let cfg = CostScanConfig {
        k_values: vec![5, 11, 30, 100],
        algo: AlgoConfig::defaults(Algo::Ppo),
        hidden: vec![32, 32],
        steps_per_trial: COST_STEPS_PER_TRIAL,
        repeats: COST_REPEATS,
    };
    let res = cost_scan("pendulum-swingup", &cfg, 0).map_err(|e| e.to_string())?;
    let baseline = &res.entries[0];
    if baseline.label != "gaussian" || baseline.percent != 100.0 {
        return Err(format!(
            "baseline row is {} at {}%, expected gaussian at exactly 100%",
            baseline.label, baseline.percent
        ));
    }
    let discrete: Vec<(usize, f64)> = res
        .entries
        .iter()
        .filter_map(|e| e.k.map(|k| (k, e.percent)))
        .collect();
    if discrete.len() != 4 {
        return Err(format!("expected 4 discrete rows, found {}", discrete.len()));
    }
    for w in discrete.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(format!(
                "cost does not rise from K={} ({:.1}%) to K={} ({:.1}%)",
                w[0].0, w[0].1, w[1].0, w[1].1
            ));
        }
    }
    let summary: Vec<String> = discrete
        .iter()
        .map(|(k, p)| format!("K={k} {p:.0}%"))
        .collect();
    Ok(format!("strictly increasing: {}", summary.join(", ")))
}

// ------------------------------------------ check 5: gradient correctness

const FD_STEP: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-4;
const FD_CONFIGS_PER_HEAD: usize = 100;

struct LogProbF<'a> {
    policy: &'a PolicyNet,
    obs: &'a [f64],
    sample: &'a ActionSample,
}

impl ParamScalarFn for LogProbF<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        self.policy.log_prob_node(tape, &nodes, self.obs, self.sample)
    }
}

struct EntropyF<'a> {
    policy: &'a PolicyNet,
    obs: &'a [f64],
}

impl ParamScalarFn for EntropyF<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        self.policy.entropy_node(tape, &nodes, self.obs)
    }
}

struct KlF<'a> {
    policy: &'a PolicyNet,
    obs: &'a [f64],
    old: &'a PolicyDistribution,
}

impl ParamScalarFn for KlF<'_> {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var {
        let nodes = self.policy.carve(tape, params);
        self.policy.kl_node(tape, &nodes, self.obs, self.old)
    }
}

fn fd_gradient(f: &impl ParamScalarFn, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let hi = value_of(f, &probe);
        probe[i] = x[i] - FD_STEP;
        let lo = value_of(f, &probe);
        probe[i] = x[i];
        g[i] = (hi - lo) / (2.0 * FD_STEP);
    }
    g
}

fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Small random policy with perturbed parameters and a random observation.
fn random_fd_case(head: HeadKind, seed: u64) -> (PolicyNet, Vec<f64>, Vec<f64>) {
    let mut rng: Rng = rng_for(seed, stream::SCAN);
    let cfg = PolicyConfig {
        obs_dim: rng.gen_range(1..=3),
        act_dim: rng.gen_range(1..=2),
        hidden: vec![rng.gen_range(3..=6)],
        head,
        bins: head.is_atomic().then(|| rng.gen_range(3..=9)),
    };
    let mut policy = PolicyNet::init(&mut rng_for(seed, stream::POLICY_INIT), &cfg).unwrap();
    let mut params = policy.flatten();
    for p in &mut params.0 {
        *p += rng.gen_range(-0.4..0.4);
    }
    policy.set_params(&params).unwrap();
    let obs: Vec<f64> = (0..cfg.obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (policy, params.0, obs)
}

/// Tape gradients of log-probability, entropy, and KL for all five heads
/// must match central finite differences over 100 random configurations
/// per head.
fn c05_gradient_correctness() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for head in HeadKind::ALL {
        for c in 0..FD_CONFIGS_PER_HEAD {
            let seed = cell_seed(0x75a1, (head as u64) << 32 | c as u64);
            let (policy, params, obs) = random_fd_case(head, seed);
            let mut rng: Rng = rng_for(seed, stream::SAMPLE);
            let dist = policy.distribution(&obs).map_err(|e| e.to_string())?;
            let sample = dist.sample(&mut rng).map_err(|e| e.to_string())?;
            let mut old_policy = policy.clone();
            let mut old_params = old_policy.flatten();
            let mut old_rng: Rng = rng_for(cell_seed(seed, 1), stream::SCAN);
            for p in &mut old_params.0 {
                *p += old_rng.gen_range(-0.4..0.4);
            }
            old_policy.set_params(&old_params).unwrap();
            let old = old_policy.distribution(&obs).map_err(|e| e.to_string())?;

            let lp = LogProbF { policy: &policy, obs: &obs, sample: &sample };
            let en = EntropyF { policy: &policy, obs: &obs };
            let kl = KlF { policy: &policy, obs: &obs, old: &old };
            for (name, err) in [
                ("log_prob", {
                    let (_, g) = value_and_grad(&lp, &params);
                    max_rel_err(&g, &fd_gradient(&lp, &params))
                }),
                ("entropy", {
                    let (_, g) = value_and_grad(&en, &params);
                    max_rel_err(&g, &fd_gradient(&en, &params))
                }),
                ("kl", {
                    let (_, g) = value_and_grad(&kl, &params);
                    max_rel_err(&g, &fd_gradient(&kl, &params))
                }),
            ] {
                if err > worst {
                    worst = err;
                    worst_at = format!("{head} {name} config {c}");
                }
            }
        }
    }
    if worst >= FD_TOLERANCE {
        return Err(format!("worst relative error {worst:.2e} at {worst_at}"));
    }
    Ok(format!(
        "5 heads x 3 scalars x {FD_CONFIGS_PER_HEAD} configs, worst relative error {worst:.1e}"
    ))
}

// -------------------------------------- check 6: distribution identities

/// Self-KL at zero, uniform entropy at ln K, the gaussian KL closed form
/// against a million-sample Monte-Carlo estimate, and uniformity of the
/// symmetric ordinal case.
fn c06_distribution_identities() -> Result<String, String> {
    // KL(p, p) = 0 for every head.
    for head in HeadKind::ALL {
        for c in 0..20u64 {
            let seed = cell_seed(0x6d1, (head as u64) * 100 + c);
            let mut rng: Rng = rng_for(seed, stream::SCAN);
            let cfg = PolicyConfig {
                obs_dim: rng.gen_range(1..=3),
                act_dim: rng.gen_range(1..=2),
                hidden: vec![rng.gen_range(3..=8)],
                head,
                bins: head.is_atomic().then(|| rng.gen_range(2..=15)),
            };
            let mut policy =
                PolicyNet::init(&mut rng_for(seed, stream::POLICY_INIT), &cfg).unwrap();
            let mut params = policy.flatten();
            for p in &mut params.0 {
                *p += rng.gen_range(-0.8..0.8);
            }
            policy.set_params(&params).unwrap();
            let obs: Vec<f64> = (0..cfg.obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dist = policy.distribution(&obs).map_err(|e| e.to_string())?;
            let kl = dist.kl(&dist).map_err(|e| e.to_string())?;
            if kl.abs() > 1e-12 {
                return Err(format!("{head} config {c}: KL(p,p) = {kl:.3e}"));
            }
        }
    }
    // Uniform categorical entropy equals ln K.
    for k in 2..=50usize {
        let dims = vec![DimDist::categorical_from_logits(&vec![0.0; k])];
        let grid = ActionGrid::new(k).map_err(|e| e.to_string())?;
        let dist = PolicyDistribution::new(HeadKind::Discrete, dims, Some(grid))
            .map_err(|e| e.to_string())?;
        if (dist.entropy() - (k as f64).ln()).abs() > 1e-12 {
            return Err(format!("uniform K={k}: entropy != ln K"));
        }
    }
    // Gaussian KL closed form vs Monte Carlo.
    let mut rng: Rng = rng_for(0xabcd, stream::SAMPLE);
    let draw = |rng: &mut Rng| -> Vec<DimDist> {
        (0..2)
            .map(|_| DimDist::Gaussian {
                mean: rng.gen_range(-0.8..0.8),
                log_std: rng.gen_range(-1.0..0.3),
            })
            .collect()
    };
    let p = PolicyDistribution::new(HeadKind::Gaussian, draw(&mut rng), None)
        .map_err(|e| e.to_string())?;
    let q = PolicyDistribution::new(HeadKind::Gaussian, draw(&mut rng), None)
        .map_err(|e| e.to_string())?;
    let closed = p.kl(&q).map_err(|e| e.to_string())?;
    let n = 1_000_000usize;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let s = p.sample(&mut rng).map_err(|e| e.to_string())?;
        let diff = s.behavior_log_prob - q.log_prob(&s).map_err(|e| e.to_string())?;
        sum += diff;
        sum_sq += diff * diff;
    }
    let mc = sum / n as f64;
    let se = ((sum_sq / n as f64 - mc * mc).max(0.0) / n as f64).sqrt();
    if (closed - mc).abs() > 3.0 * se {
        return Err(format!(
            "gaussian KL closed form {closed:.6} vs Monte Carlo {mc:.6} differs by more than 3 SE ({:.1e})",
            3.0 * se
        ));
    }
    // Symmetric ordinal head yields exactly uniform probabilities.
    for k in [2usize, 3, 7, 11, 15] {
        let cfg = PolicyConfig {
            obs_dim: 2,
            act_dim: 1,
            hidden: vec![5],
            head: HeadKind::Ordinal,
            bins: Some(k),
        };
        let mut policy = PolicyNet::init(&mut rng_for(3, stream::POLICY_INIT), &cfg).unwrap();
        let mut params = policy.flatten();
        let n_enc = policy.encoder_param_count();
        for p in &mut params.0[n_enc..] {
            *p = 0.0;
        }
        policy.set_params(&params).unwrap();
        let dist = policy.distribution(&[0.3, -0.7]).map_err(|e| e.to_string())?;
        match &dist.dims()[0] {
            DimDist::Categorical { probs, .. } => {
                for &pj in probs {
                    if (pj - 1.0 / k as f64).abs() > 1e-12 {
                        return Err(format!("symmetric ordinal K={k} not uniform: p={pj}"));
                    }
                }
            }
            other => return Err(format!("ordinal head produced {other:?}")),
        }
    }
    Ok(format!(
        "self-KL zero, uniform entropy = ln K, gaussian KL within {:.1e} of Monte Carlo (3 SE {:.1e}), symmetric ordinal uniform",
        (closed - mc).abs(),
        3.0 * se
    ))
}

// ------------------------------------------------ check 7: ordinal order

/// Cumulative-encoding cross entropy must rank nearer classes strictly
/// closer for every base class and every K from 3 to 15, while the
/// one-hot encoding's discrepancies are exactly distance-blind.
fn c07_ordinal_ordering() -> Result<String, String> {
    let mut compared = 0usize;
    for bins in 3..=15usize {
        for k in 1..=(bins - 2) {
            let near =
                stable_cross_entropy(&cumulative_target(k, bins), &cumulative_target(k + 1, bins));
            let far =
                stable_cross_entropy(&cumulative_target(k, bins), &cumulative_target(k + 2, bins));
            if !(near < far) {
                return Err(format!("bins={bins} k={k}: CE {near} not below {far}"));
            }
            compared += 1;
        }
        for k in 0..(bins - 2) {
            let near = stable_cross_entropy(&one_hot(k, bins), &one_hot(k + 1, bins));
            let far = stable_cross_entropy(&one_hot(k, bins), &one_hot(k + 2, bins));
            if near != far {
                return Err(format!(
                    "bins={bins} k={k}: one-hot control differs, {near} vs {far}"
                ));
            }
        }
    }
    Ok(format!(
        "cumulative CE strictly distance-ordered over {compared} (K, k) pairs; one-hot control exactly flat"
    ))
}

// ----------------------------------------- check 8: trust-region contract

const TRPO_UPDATES: usize = 200;
const TRPO_BATCH_STEPS: usize = 1024;
const TRPO_BUDGET_S: f64 = 600.0;

/// 200 trust-region updates on the reacher: every accepted step must have
/// measured mean KL at or below delta and nonnegative surrogate
/// improvement, and at least 90% of steps must be accepted.
fn c08_trust_region_contract() -> Result<String, String> {
    let started = Instant::now();
    let seed = 0u64;
    let cfg = AlgoConfig::defaults(Algo::Trpo);
    let env = make_env("pointmass-reacher").map_err(|e| e.to_string())?;
    let spec = env.spec();
    let pcfg = PolicyConfig {
        obs_dim: spec.obs_dim,
        act_dim: spec.act_dim,
        hidden: vec![32, 32],
        head: HeadKind::Gaussian,
        bins: None,
    };
    let mut policy = PolicyNet::init(&mut rng_for(seed, stream::POLICY_INIT), &pcfg)
        .map_err(|e| e.to_string())?;
    let mut value = ValueNet::init(&mut rng_for(seed, stream::VALUE_INIT), spec.obs_dim, &[32, 32]);
    let mut opt = Adam::new(value.param_count(), cfg.value_lr);
    let mut shuffle: Rng = rng_for(seed, stream::SHUFFLE);
    let mut collector = Collector::new(env, seed);

    let mut accepted = 0usize;
    let mut kl_violations = 0usize;
    let mut negative_improvements = 0usize;
    let mut worst_kl = 0.0f64;
    for _ in 0..TRPO_UPDATES {
        let batch = collector
            .collect(&policy, |o| value.predict(o), TRPO_BATCH_STEPS)
            .map_err(|e| e.to_string())?;
        let est = gae(&batch, cfg.gamma, cfg.lambda).map_err(|e| e.to_string())?;
        let mut adv = est.advantages;
        if cfg.normalize_advantages {
            normalize_advantages(&mut adv);
        }
        let report = trpo_update(&mut policy, &batch, &adv, &cfg).map_err(|e| e.to_string())?;
        if !report.rejected {
            accepted += 1;
            worst_kl = worst_kl.max(report.kl);
            if report.kl > cfg.delta + 1e-12 {
                kl_violations += 1;
            }
            if report.improvement < 0.0 {
                negative_improvements += 1;
            }
        }
        value_fit(
            &mut value,
            &mut opt,
            &batch.obs,
            &est.returns,
            cfg.value_epochs,
            cfg.value_minibatch,
            &mut shuffle,
        )
        .map_err(|e| e.to_string())?;
    }
    let ran = started.elapsed().as_secs_f64();
    if kl_violations > 0 {
        return Err(format!(
            "{kl_violations} accepted steps exceeded delta {}; worst KL {worst_kl:.5}",
            cfg.delta
        ));
    }
    if negative_improvements > 0 {
        return Err(format!(
            "{negative_improvements} accepted steps had negative surrogate improvement"
        ));
    }
    if accepted * 10 < TRPO_UPDATES * 9 {
        return Err(format!(
            "only {accepted}/{TRPO_UPDATES} steps accepted, below 90%"
        ));
    }
    Ok(format!(
        "{accepted}/{TRPO_UPDATES} accepted, worst mean KL {worst_kl:.5} <= {}, all improvements >= 0; ran {ran:.0}s of {TRPO_BUDGET_S:.0}s budget",
        cfg.delta
    ))
}

// ------------------------------------------------ check 9: clip arithmetic

/// The three reference evaluations of the clipped objective term.
fn c09_clip_arithmetic() -> Result<String, String> {
    let cases = [
        ((1.5, 1.0, 0.2), 1.2),
        ((0.5, -1.0, 0.2), -0.8),
        ((1.0, 0.7, 0.2), 0.7),
    ];
    for ((ratio, adv, clip), want) in cases {
        let got = clipped_term(ratio, adv, clip);
        if got != want {
            return Err(format!(
                "clipped_term({ratio}, {adv}, {clip}) = {got}, expected {want}"
            ));
        }
    }
    Ok("all three reference cases exact".to_string())
}

// ----------------------------------------------- check 10: advantage oracle

fn placeholder_samples(t: usize) -> Vec<ActionSample> {
    (0..t)
        .map(|_| ActionSample {
            continuous: vec![0.0],
            raw: vec![0.0],
            atom_indices: None,
            behavior_log_prob: 0.0,
        })
        .collect()
}

/// The advantage recursion must equal the explicit truncated lambda-sum.
fn c10_advantage_oracle() -> Result<String, String> {
    let mut rng: Rng = rng_for(0x6ae, stream::SCAN);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let t = rng.gen_range(5..=60);
        let batch = RolloutBatch {
            obs: vec![vec![0.0]; t],
            samples: placeholder_samples(t),
            rewards: (0..t).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            dones: (0..t).map(|_| rng.gen_bool(0.2)).collect(),
            values: (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bootstrap_value: rng.gen_range(-1.0..1.0),
            episode_returns: Vec::new(),
        };
        let gamma = rng.gen_range(0.5..1.0);
        let lambda = rng.gen_range(0.0..=1.0);
        let est = gae(&batch, gamma, lambda).map_err(|e| e.to_string())?;
        // explicit truncated sum of discounted TD residuals
        let t_len = batch.rewards.len();
        let delta = |k: usize| {
            let next = if batch.dones[k] {
                0.0
            } else if k + 1 == t_len {
                batch.bootstrap_value
            } else {
                batch.values[k + 1]
            };
            batch.rewards[k] + gamma * next - batch.values[k]
        };
        for t0 in 0..t_len {
            let mut acc = 0.0;
            let mut w = 1.0;
            for k in t0..t_len {
                acc += w * delta(k);
                if batch.dones[k] {
                    break;
                }
                w *= gamma * lambda;
            }
            worst = worst.max((est.advantages[t0] - acc).abs());
        }
    }
    if worst >= 1e-10 {
        return Err(format!("max abs diff {worst:.2e} >= 1e-10"));
    }
    Ok(format!("50 random batches, max abs diff {worst:.1e}"))
}

// --------------------------------------- check 11: conjugate-gradient oracle

/// Gaussian elimination with partial pivoting, the dense reference.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Conjugate gradient must match the dense solver on random SPD systems.
fn c11_conjugate_gradient_oracle() -> Result<String, String> {
    let n = 20;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng: Rng = rng_for(cell_seed(0x3c9, trial), stream::SCAN);
        let b_mat: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| b_mat[i][k] * b_mat[j][k]).sum::<f64>();
            }
            a[i][i] += n as f64;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a_ref = &a;
        let apply = |x: &[f64]| -> Vec<f64> {
            a_ref
                .iter()
                .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
                .collect()
        };
        let cg = conjugate_gradient(apply, &rhs, 200, 1e-13).map_err(|e| e.to_string())?;
        let exact = dense_solve(a.clone(), rhs.clone());
        let num = cg
            .x
            .iter()
            .zip(&exact)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let den = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    if worst >= 1e-8 {
        return Err(format!("worst relative error {worst:.2e} >= 1e-8"));
    }
    Ok(format!("100 random 20x20 SPD systems, worst relative error {worst:.1e}"))
}

// --------------------------------------------------- check 12: determinism

/// Rerunning a training invocation with identical arguments must produce
/// bitwise-identical manifests and curve files, excluding only the
/// wall-clock column, which measures the host rather than the run.
fn c12_determinism() -> Result<String, String> {
    let invocations: [(&str, &[&str]); 2] = [
        (
            "bandit-ordinal",
            &[
                "train", "--env", "bimodal-bandit", "--algo", "ppo", "--head", "ordinal",
                "--bins", "7", "--steps", "20480", "--seeds", "0,1",
            ],
        ),
        (
            "pendulum-tanh",
            &[
                "train", "--env", "pendulum-swingup", "--algo", "trpo", "--head",
                "gaussian_tanh", "--steps", "8192", "--seeds", "3",
            ],
        ),
    ];
    let mut files_compared = 0usize;
    for (tag, args) in invocations {
        let dir_a = fresh_dir(&format!("det-{tag}-a"))?;
        let dir_b = fresh_dir(&format!("det-{tag}-b"))?;
        for dir in [&dir_a, &dir_b] {
            let mut full: Vec<&str> = args.to_vec();
            full.push("--out");
            full.push(dir.to_str().unwrap());
            let (code, _, stderr) = run_cli(&full)?;
            if code != 0 {
                return Err(format!("{tag} exited {code}: {}", stderr.trim()));
            }
        }
        let mut names: Vec<String> = fs::read_dir(&dir_a)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        if names.is_empty() {
            return Err(format!("{tag} produced no output files"));
        }
        for name in names {
            let a = read_text(&dir_a.join(&name))?;
            let b = read_text(&dir_b.join(&name))?;
            files_compared += 1;
            if name.ends_with(".csv") && name.starts_with("curve") {
                if a.lines().count() != b.lines().count() {
                    return Err(format!("{tag}/{name}: row counts differ"));
                }
                for (la, lb) in a.lines().zip(b.lines()) {
                    let fa: Vec<&str> = la.split(',').collect();
                    let fb: Vec<&str> = lb.split(',').collect();
                    if fa[..fa.len() - 1] != fb[..fb.len() - 1] {
                        return Err(format!("{tag}/{name}: rows differ outside wall-clock column\n  {la}\n  {lb}"));
                    }
                }
            } else if a != b {
                return Err(format!("{tag}/{name}: files differ"));
            }
        }
    }
    Ok(format!(
        "2 invocations rerun, {files_compared} files bitwise identical (wall-clock column excluded)"
    ))
}

// -------------------------------------- check 13: beta instability policy

const BETA_STEPS: usize = 40_960;

/// A beta-head run at a destabilizing step size must surface failure
/// rather than hide it: every seed leaves a manifest recording whether it
/// terminated early plus a retained curve file, sibling seeds keep
/// running, and the exit code is 0 if any seed completed, 3 if all failed.
fn c13_beta_instability_policy() -> Result<String, String> {
    let dir = fresh_dir("beta")?;
    let (code, _, stderr) = run_cli(&[
        "train",
        "--env",
        "pendulum-swingup",
        "--algo",
        "ppo",
        "--head",
        "beta",
        "--lr",
        "3e-5",
        "--steps",
        &BETA_STEPS.to_string(),
        "--seeds",
        "0,1",
        "--out",
        dir.to_str().unwrap(),
    ])?;
    if code != 0 && code != 3 {
        return Err(format!(
            "exit code {code} is neither success (0) nor all-seeds-failed (3): {}",
            stderr.trim()
        ));
    }
    let mut early = 0usize;
    for seed in [0u64, 1] {
        let manifest_path = dir.join(format!("manifest_seed{seed}.json"));
        let manifest: serde_json::Value = serde_json::from_str(&read_text(&manifest_path)?)
            .map_err(|e| format!("manifest for seed {seed} is not valid JSON: {e}"))?;
        let terminated = manifest
            .get("terminated_early")
            .and_then(|v| v.as_bool())
            .ok_or_else(|| format!("manifest for seed {seed} lacks terminated_early"))?;
        let curve = read_text(&dir.join(format!("curve_seed{seed}.csv")))?;
        if !curve.starts_with("steps,") {
            return Err(format!("curve for seed {seed} lacks its header"));
        }
        if terminated {
            early += 1;
            if manifest.get("failure").map_or(true, |f| f.is_null()) {
                return Err(format!(
                    "seed {seed} terminated early but records no failure reason"
                ));
            }
        }
    }
    let all_failed = early == 2;
    if all_failed != (code == 3) {
        return Err(format!(
            "exit code {code} inconsistent with {early}/2 seeds terminated early"
        ));
    }
    let outcome = match early {
        0 => "both seeds completed".to_string(),
        2 => "both seeds surfaced early termination".to_string(),
        _ => "one seed failed early, sibling completed".to_string(),
    };
    Ok(format!("{outcome}; exit code {code} matches, curves and manifests retained"))
}
