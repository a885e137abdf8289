//! Subcommand implementations: validate flags into resolved
//! configurations, run the work on a bounded worker pool, and write
//! tables plus manifests.
//!
//! Failure policy: configuration problems abort before anything is
//! written (exit 2, message naming the flag); a numeric failure inside
//! one run is recorded in that run's manifest while sibling runs
//! continue, and the process exits 3 only when every run of a command
//! failed that way.

use crate::args::{
    parse_seed_list, parse_usize_list, BanditDemoArgs, CapacityScanArgs, Cli, Command,
    CostScanArgs, SensitivityArgs, TrainArgs, VarianceScanArgs,
};
use crate::outputs::{
    atomic_write, curve_csv, ensure_out_dir, manifest_json, RunManifest, CODE_VERSION,
};
use crate::runner::{density_csv, execute_run};
use crate::CliError;
use atomrl_core::analysis::{
    capacity_scan, cost_scan, sensitivity_scan, variance_scan, CapacityScanConfig,
    CostScanConfig, SensitivityScanConfig, VarianceScanConfig,
};
use atomrl_core::distributions::{HeadKind, PolicyConfig};
use atomrl_core::environments::make_env;
use atomrl_core::error::CoreError;
use atomrl_core::onpolicy::{Algo, AlgoConfig, Trainer};
use atomrl_core::parallel::map_cells;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Encoder widths used by every training command.
const TRAIN_HIDDEN: [usize; 2] = [32, 32];

/// Encoder width for the bandit demo; the bandit observation is a single
/// constant, so a small encoder keeps the demo fast.
const DEMO_HIDDEN: [usize; 1] = [16];

/// Atom count for the demo's discrete head; places an atom exactly on
/// the global reward mode at 0.6.
const DEMO_BINS: usize = 11;

/// Batch size for the demo (the bandit episode is one step, so this is
/// episodes per update).
const DEMO_BATCH_STEPS: usize = 512;

/// Learning rate for both demo heads.
const DEMO_LEARNING_RATE: f64 = 3e-3;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::BanditDemo(args) => cmd_bandit_demo(args),
        Command::VarianceScan(args) => cmd_variance_scan(args),
        Command::CapacityScan(args) => cmd_capacity_scan(args),
        Command::CostScan(args) => cmd_cost_scan(args),
        Command::Sensitivity(args) => cmd_sensitivity(args),
    }
}

// ---------------------------------------------------------------------
// shared validation

fn parse_env(env: &str) -> Result<(String, usize, usize), CliError> {
    let spec = make_env(env)
        .map_err(|e| CliError::config(format!("--env: {e}")))?
        .spec();
    Ok((env.to_string(), spec.obs_dim, spec.act_dim))
}

fn parse_algo(algo: &str) -> Result<Algo, CliError> {
    algo.parse::<Algo>()
        .map_err(|e| CliError::config(format!("--algo: {e}")))
}

fn parse_head(head: &str) -> Result<HeadKind, CliError> {
    head.parse::<HeadKind>()
        .map_err(|e| CliError::config(format!("--head: {e}")))
}

fn parse_seeds(seeds: &str) -> Result<Vec<u64>, CliError> {
    parse_seed_list(seeds).map_err(|e| CliError::config(format!("--seeds: {e}")))
}

fn parse_master_seed(seeds: &str, command: &str) -> Result<u64, CliError> {
    let list = parse_seeds(seeds)?;
    if list.len() != 1 {
        return Err(CliError::config(format!(
            "--seeds: {command} takes exactly one master seed, got {}",
            list.len()
        )));
    }
    Ok(list[0])
}

fn parse_k_values(text: &str) -> Result<Vec<usize>, CliError> {
    let ks = parse_usize_list(text).map_err(|e| CliError::config(format!("--k-values: {e}")))?;
    for &k in &ks {
        if k < 2 {
            return Err(CliError::config(format!(
                "--k-values: atom count {k} is below the minimum of 2"
            )));
        }
    }
    let mut sorted = ks.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::config(format!(
            "--k-values: list '{text}' contains duplicates"
        )));
    }
    Ok(ks)
}

fn require_at_least(value: usize, minimum: usize, flag: &str) -> Result<(), CliError> {
    if value < minimum {
        return Err(CliError::config(format!(
            "{flag} must be at least {minimum}, got {value}"
        )));
    }
    Ok(())
}

/// Optional hyperparameter overrides shared by `train` and the scans.
#[derive(Default)]
struct AlgoOverrides {
    lr: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    lam: Option<f64>,
    clip: Option<f64>,
    entropy_coef: Option<f64>,
}

/// Applies flag overrides onto the per-algorithm defaults, rejecting
/// flags that do not apply to the selected algorithm and values outside
/// their documented domains. Messages name the flag.
fn resolved_algo(algo: Algo, o: &AlgoOverrides) -> Result<AlgoConfig, CliError> {
    let mut cfg = AlgoConfig::defaults(algo);
    if let Some(lr) = o.lr {
        if algo == Algo::Trpo {
            return Err(CliError::config(
                "--lr does not apply to trpo (the step size comes from --delta)",
            ));
        }
        if !(lr.is_finite() && lr > 0.0) {
            return Err(CliError::config(format!("--lr must be positive, got {lr}")));
        }
        cfg.learning_rate = lr;
    }
    if let Some(delta) = o.delta {
        if algo != Algo::Trpo {
            return Err(CliError::config(format!(
                "--delta only applies to trpo ({algo} takes --lr)"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(CliError::config(format!(
                "--delta must be positive, got {delta}"
            )));
        }
        cfg.delta = delta;
    }
    if let Some(gamma) = o.gamma {
        if !(0.0..1.0).contains(&gamma) {
            return Err(CliError::config(format!(
                "--gamma must be in [0, 1), got {gamma}"
            )));
        }
        cfg.gamma = gamma;
    }
    if let Some(lam) = o.lam {
        if !(0.0..=1.0).contains(&lam) {
            return Err(CliError::config(format!(
                "--lam must be in [0, 1], got {lam}"
            )));
        }
        cfg.lambda = lam;
    }
    if let Some(clip) = o.clip {
        if algo != Algo::Ppo {
            return Err(CliError::config(format!(
                "--clip only applies to ppo, not {algo}"
            )));
        }
        if !(clip > 0.0 && clip < 1.0) {
            return Err(CliError::config(format!(
                "--clip must be in (0, 1), got {clip}"
            )));
        }
        cfg.clip = clip;
    }
    if let Some(coef) = o.entropy_coef {
        if !(coef.is_finite() && coef >= 0.0) {
            return Err(CliError::config(format!(
                "--entropy-coef must be >= 0, got {coef}"
            )));
        }
        cfg.entropy_coef = coef;
    }
    Ok(cfg)
}

/// Sizes the worker pool when parallel runs were requested. Without the
/// `parallel` feature the request is honored sequentially.
#[cfg(feature = "parallel")]
fn configure_worker_pool(parallelism: usize) {
    if parallelism > 1 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_worker_pool(parallelism: usize) {
    if parallelism > 1 {
        eprintln!("note: built without the parallel feature; runs execute sequentially");
    }
}

// ---------------------------------------------------------------------
// train

struct TrainPlan {
    env: String,
    policy: PolicyConfig,
    algo: AlgoConfig,
    seeds: Vec<u64>,
    steps: usize,
    out: PathBuf,
    parallelism: usize,
}

fn resolve_train(args: &TrainArgs) -> Result<TrainPlan, CliError> {
    let (env, obs_dim, act_dim) = parse_env(&args.env)?;
    let algo = parse_algo(&args.algo)?;
    let head = parse_head(&args.head)?;
    match (head.is_atomic(), args.bins) {
        (true, None) => {
            return Err(CliError::config(format!(
                "--head {head} requires --bins (atoms per action dimension)"
            )))
        }
        (false, Some(_)) => {
            return Err(CliError::config(
                "--bins only applies to the discrete and ordinal heads",
            ))
        }
        (true, Some(bins)) if bins < 2 => {
            return Err(CliError::config(format!(
                "--bins must be at least 2, got {bins}"
            )))
        }
        _ => {}
    }
    require_at_least(args.steps, 1, "--steps")?;
    require_at_least(args.parallelism, 1, "--parallelism")?;
    let seeds = parse_seeds(&args.seeds)?;
    let algo_cfg = resolved_algo(
        algo,
        &AlgoOverrides {
            lr: args.lr,
            delta: args.delta,
            gamma: args.gamma,
            lam: args.lam,
            clip: args.clip,
            entropy_coef: args.entropy_coef,
        },
    )?;
    let policy = PolicyConfig {
        obs_dim,
        act_dim,
        hidden: TRAIN_HIDDEN.to_vec(),
        head,
        bins: args.bins,
    };
    // Dry-run construction so every remaining configuration error
    // surfaces here, before any file is written or sibling run started.
    Trainer::new(&env, &policy, algo_cfg.clone(), seeds[0])
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(TrainPlan {
        env,
        policy,
        algo: algo_cfg,
        seeds,
        steps: args.steps,
        out: args.out.clone(),
        parallelism: args.parallelism,
    })
}

/// Outcome of one run for exit-code accounting and the console summary.
struct SeedStatus {
    label: String,
    failed: bool,
    detail: String,
}

fn finish_runs(what: &str, statuses: Vec<Result<SeedStatus, CliError>>) -> Result<(), CliError> {
    let mut all_failed = true;
    let mut lines = String::new();
    for status in statuses {
        let status = status?;
        if !status.failed {
            all_failed = false;
        }
        writeln!(lines, "{}: {}", status.label, status.detail).expect("string writes cannot fail");
    }
    print!("{lines}");
    if all_failed {
        return Err(CliError::all_seeds_failed(format!(
            "every {what} run terminated early; partial curves and manifests were retained"
        )));
    }
    Ok(())
}

fn run_status(label: String, run: &crate::runner::CompletedRun) -> SeedStatus {
    let detail = if run.terminated_early {
        format!(
            "terminated early after {} updates ({})",
            run.history.len(),
            run.failure.as_deref().unwrap_or("unknown failure")
        )
    } else {
        match run.final_mean_return() {
            Some(r) => format!("{} updates, final mean return {r:.4}", run.history.len()),
            None => "no updates completed".to_string(),
        }
    };
    SeedStatus {
        label,
        failed: run.terminated_early,
        detail,
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let plan = resolve_train(&args)?;
    ensure_out_dir(&plan.out)?;
    configure_worker_pool(plan.parallelism);
    let statuses = map_cells(plan.seeds.len(), plan.parallelism > 1, |i| {
        let seed = plan.seeds[i];
        let run = execute_run(&plan.env, &plan.policy, plan.algo.clone(), seed, plan.steps)
            .map_err(|e| CliError::config(format!("seed {seed}: {e}")))?;
        atomic_write(&plan.out, &format!("curve_seed{seed}.csv"), &curve_csv(&run.history))?;
        let manifest = RunManifest {
            command: "train".to_string(),
            env: plan.env.clone(),
            seed,
            total_steps: plan.steps,
            policy: plan.policy.clone(),
            algo: plan.algo.clone(),
            code_version: CODE_VERSION.to_string(),
            terminated_early: run.terminated_early,
            failure: run.failure.clone(),
        };
        atomic_write(
            &plan.out,
            &format!("manifest_seed{seed}.json"),
            &manifest_json(&manifest),
        )?;
        Ok(run_status(format!("seed {seed}"), &run))
    });
    finish_runs("train", statuses)
}

// ---------------------------------------------------------------------
// bandit-demo

fn cmd_bandit_demo(args: BanditDemoArgs) -> Result<(), CliError> {
    require_at_least(args.steps, 1, "--steps")?;
    require_at_least(args.parallelism, 1, "--parallelism")?;
    let seeds = parse_seeds(&args.seeds)?;
    ensure_out_dir(&args.out)?;
    configure_worker_pool(args.parallelism);

    let heads: [(HeadKind, Option<usize>, &str); 2] = [
        (HeadKind::Discrete, Some(DEMO_BINS), "discrete"),
        (HeadKind::Gaussian, None, "gaussian"),
    ];
    let env = "bimodal-bandit";
    let n_seeds = seeds.len();

    let statuses = map_cells(heads.len() * n_seeds, args.parallelism > 1, |cell| {
        let (head, bins, label) = heads[cell / n_seeds];
        let seed = seeds[cell % n_seeds];
        let policy = PolicyConfig {
            obs_dim: 1,
            act_dim: 1,
            hidden: DEMO_HIDDEN.to_vec(),
            head,
            bins,
        };
        let mut algo = AlgoConfig::defaults(Algo::Ppo);
        algo.batch_steps = DEMO_BATCH_STEPS;
        algo.learning_rate = DEMO_LEARNING_RATE;
        let run = execute_run(env, &policy, algo.clone(), seed, args.steps)
            .map_err(|e| CliError::config(format!("{label} seed {seed}: {e}")))?;
        atomic_write(
            &args.out,
            &format!("curve_{label}_seed{seed}.csv"),
            &curve_csv(&run.history),
        )?;
        atomic_write(
            &args.out,
            &format!("density_{label}_seed{seed}.csv"),
            &density_csv(&run.final_policy, env, seed)
                .map_err(|e| CliError::config(format!("{label} seed {seed}: {e}")))?,
        )?;
        let manifest = RunManifest {
            command: "bandit-demo".to_string(),
            env: env.to_string(),
            seed,
            total_steps: args.steps,
            policy,
            algo,
            code_version: CODE_VERSION.to_string(),
            terminated_early: run.terminated_early,
            failure: run.failure.clone(),
        };
        atomic_write(
            &args.out,
            &format!("manifest_{label}_seed{seed}.json"),
            &manifest_json(&manifest),
        )?;
        Ok(run_status(format!("{label} seed {seed}"), &run))
    });
    finish_runs("bandit-demo", statuses)
}

// ---------------------------------------------------------------------
// scans

/// Maps a scan-level core error to the exit-code families: numeric
/// failures are exit 3, anything else is configuration (exit 2).
fn scan_error(e: CoreError) -> CliError {
    if e.is_numeric() {
        CliError::all_seeds_failed(e.to_string())
    } else {
        CliError::config(e.to_string())
    }
}

fn cmd_variance_scan(args: VarianceScanArgs) -> Result<(), CliError> {
    let (env, _, _) = parse_env(&args.env)?;
    let seed = parse_master_seed(&args.seeds, "variance-scan")?;
    let k_values = parse_k_values(&args.k_values)?;
    require_at_least(args.inits, 1, "--inits")?;
    require_at_least(args.draws, 2, "--draws")?;
    require_at_least(args.parallelism, 1, "--parallelism")?;
    let anchor = *k_values.iter().max().expect("k list is non-empty");
    let cfg = VarianceScanConfig {
        k_values,
        n_inits: args.inits,
        n_grad_samples: args.draws,
        anchor,
        hidden: TRAIN_HIDDEN.to_vec(),
        parallel: args.parallelism > 1,
    };
    ensure_out_dir(&args.out)?;
    configure_worker_pool(args.parallelism);
    let result = variance_scan(&env, &cfg, seed).map_err(scan_error)?;

    let mut csv = String::from("K,empirical_norm,theoretical_norm,raw_variance\n");
    for (i, &k) in result.k_values.iter().enumerate() {
        writeln!(
            csv,
            "{k},{},{},{}",
            result.empirical_norm[i], result.theoretical_norm[i], result.raw_variance[i]
        )
        .expect("string writes cannot fail");
    }
    atomic_write(&args.out, "variance.csv", &csv)?;
    let manifest = serde_json::json!({
        "command": "variance-scan",
        "env": env,
        "master_seed": seed,
        "k_values": cfg.k_values,
        "inits": cfg.n_inits,
        "draws": cfg.n_grad_samples,
        "anchor": cfg.anchor,
        "hidden": cfg.hidden,
        "code_version": CODE_VERSION,
    });
    atomic_write(&args.out, "manifest.json", &manifest_json(&manifest))?;
    for (i, &k) in result.k_values.iter().enumerate() {
        println!(
            "K={k}: empirical {:.4}, theoretical {:.4}",
            result.empirical_norm[i], result.theoretical_norm[i]
        );
    }
    Ok(())
}

fn cmd_capacity_scan(args: CapacityScanArgs) -> Result<(), CliError> {
    let (env, _, _) = parse_env(&args.env)?;
    let algo = parse_algo(&args.algo)?;
    let k_values = parse_k_values(&args.k_values)?;
    let seeds = parse_seeds(&args.seeds)?;
    require_at_least(args.steps, 1, "--steps")?;
    require_at_least(args.parallelism, 1, "--parallelism")?;
    let algo_cfg = resolved_algo(
        algo,
        &AlgoOverrides {
            lr: args.lr,
            gamma: args.gamma,
            lam: args.lam,
            clip: args.clip,
            entropy_coef: args.entropy_coef,
            ..Default::default()
        },
    )?;
    let cfg = CapacityScanConfig {
        k_values,
        seeds,
        algo: algo_cfg,
        hidden: TRAIN_HIDDEN.to_vec(),
        total_steps: args.steps,
        parallel: args.parallelism > 1,
    };
    ensure_out_dir(&args.out)?;
    configure_worker_pool(args.parallelism);
    let result = capacity_scan(&env, &cfg).map_err(scan_error)?;

    let mut csv = String::from("K,seed,final_return,terminated_early\n");
    for cell in &result.cells {
        writeln!(
            csv,
            "{},{},{},{}",
            cell.k, cell.seed, cell.final_return, cell.terminated_early
        )
        .expect("string writes cannot fail");
    }
    atomic_write(&args.out, "capacity.csv", &csv)?;
    let mut summary = String::from("K,mean_final_return\n");
    for &(k, mean) in &result.mean_by_k {
        writeln!(summary, "{k},{mean}").expect("string writes cannot fail");
    }
    atomic_write(&args.out, "capacity_summary.csv", &summary)?;
    let manifest = serde_json::json!({
        "command": "capacity-scan",
        "env": env,
        "k_values": cfg.k_values,
        "seeds": cfg.seeds,
        "steps": cfg.total_steps,
        "hidden": cfg.hidden,
        "algo": cfg.algo,
        "code_version": CODE_VERSION,
    });
    atomic_write(&args.out, "manifest.json", &manifest_json(&manifest))?;

    for &(k, mean) in &result.mean_by_k {
        println!("K={k}: mean final return {mean:.2}");
    }
    if result.cells.iter().all(|c| c.terminated_early) {
        return Err(CliError::all_seeds_failed(
            "every capacity cell terminated early; sentinel returns were recorded",
        ));
    }
    Ok(())
}

fn cmd_cost_scan(args: CostScanArgs) -> Result<(), CliError> {
    let (env, _, _) = parse_env(&args.env)?;
    let seed = parse_master_seed(&args.seeds, "cost-scan")?;
    let k_values = parse_k_values(&args.k_values)?;
    require_at_least(args.steps, 1, "--steps")?;
    require_at_least(args.repeats, 1, "--repeats")?;
    let cfg = CostScanConfig {
        k_values,
        algo: AlgoConfig::defaults(Algo::Ppo),
        hidden: TRAIN_HIDDEN.to_vec(),
        steps_per_trial: args.steps,
        repeats: args.repeats,
    };
    ensure_out_dir(&args.out)?;
    let result = cost_scan(&env, &cfg, seed).map_err(scan_error)?;

    let mut csv = String::from("label,bins,median_wall_ms,percent\n");
    for entry in &result.entries {
        let bins = entry.k.map(|k| k.to_string()).unwrap_or_default();
        writeln!(csv, "{},{bins},{},{}", entry.label, entry.wall_ms, entry.percent)
            .expect("string writes cannot fail");
    }
    atomic_write(&args.out, "cost.csv", &csv)?;
    let manifest = serde_json::json!({
        "command": "cost-scan",
        "env": env,
        "master_seed": seed,
        "k_values": cfg.k_values,
        "steps_per_trial": cfg.steps_per_trial,
        "repeats": cfg.repeats,
        "hidden": cfg.hidden,
        "algo": cfg.algo,
        "code_version": CODE_VERSION,
    });
    atomic_write(&args.out, "manifest.json", &manifest_json(&manifest))?;
    for entry in &result.entries {
        println!("{}: {:.0} ms ({:.0}%)", entry.label, entry.wall_ms, entry.percent);
    }
    Ok(())
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<(), CliError> {
    let (env, _, _) = parse_env(&args.env)?;
    let seed = parse_master_seed(&args.seeds, "sensitivity")?;
    require_at_least(args.draws, 1, "--draws")?;
    require_at_least(args.steps, 1, "--steps")?;
    require_at_least(args.parallelism, 1, "--parallelism")?;
    let mut heads = Vec::new();
    for token in args.heads.split(',') {
        let head = parse_head(token.trim()).map_err(|e| {
            CliError::config(e.message.replace("--head:", "--heads:"))
        })?;
        if heads.contains(&head) {
            return Err(CliError::config(format!("--heads lists {head} twice")));
        }
        heads.push(head);
    }
    let cfg = SensitivityScanConfig {
        heads,
        n_draws: args.draws,
        algo: AlgoConfig::defaults(Algo::Ppo),
        hidden: TRAIN_HIDDEN.to_vec(),
        total_steps: args.steps,
        parallel: args.parallelism > 1,
    };
    ensure_out_dir(&args.out)?;
    configure_worker_pool(args.parallelism);
    let summaries = sensitivity_scan(&env, &cfg, seed).map_err(scan_error)?;

    let mut draws = String::from("head,log10_lr,seed,k,final_return,failed\n");
    let mut quantiles = String::from("head,q0,q25,q50,q75,q100\n");
    for summary in &summaries {
        for d in &summary.draws {
            let k = d.k.map(|k| k.to_string()).unwrap_or_default();
            writeln!(
                draws,
                "{},{},{},{k},{},{}",
                d.head, d.log10_lr, d.seed, d.final_return, d.failed
            )
            .expect("string writes cannot fail");
        }
        let q = summary.quantiles;
        writeln!(quantiles, "{},{},{},{},{},{}", summary.head, q[0], q[1], q[2], q[3], q[4])
            .expect("string writes cannot fail");
    }
    atomic_write(&args.out, "sensitivity_draws.csv", &draws)?;
    atomic_write(&args.out, "sensitivity_quantiles.csv", &quantiles)?;
    let manifest = serde_json::json!({
        "command": "sensitivity",
        "env": env,
        "master_seed": seed,
        "heads": cfg.heads,
        "draws_per_head": cfg.n_draws,
        "steps": cfg.total_steps,
        "hidden": cfg.hidden,
        "algo": cfg.algo,
        "code_version": CODE_VERSION,
    });
    atomic_write(&args.out, "manifest.json", &manifest_json(&manifest))?;
    for summary in &summaries {
        println!(
            "{}: median final return {:.2} (worst {:.2}, best {:.2})",
            summary.head, summary.quantiles[2], summary.quantiles[0], summary.quantiles[4]
        );
    }
    Ok(())
}
