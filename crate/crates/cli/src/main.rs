//! `bandit-sim`: simulations, LP diagnostics and bound verification for
//! Gaussian bandits with side observations.
//!
//! Exit codes: 0 success, 1 runtime failure or violated bound, 2 invalid input.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sidebandit::environment::{FeedbackMatrix, Instance, RandomFeedback};
use sidebandit::harness::verify::{
    anytime_grid, stopping_grid, AnytimeCase, McOutcome, SourceRule, StoppingCase, StoppingRule,
};
use sidebandit::harness::{self, geometric_checkpoints, RunConfig};
use sidebandit::io::{instance_to_json, load_instance};
use sidebandit::lp::{self, DEFAULT_GAP_FLOOR};
use sidebandit::policy::{PolicyKind, PolicyParams, DEFAULT_ALPHA, DEFAULT_GAMMA};

const DEFAULT_HORIZON: u64 = 1 << 17;
const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Parser, Debug)]
#[command(name = "bandit-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a policy over seeded replications and write a results directory.
    Run(RunArgs),
    /// Solve the exploration LP for an instance.
    Lp(LpArgs),
    /// Monte-Carlo check of the deviation bounds.
    Verify(VerifyArgs),
    /// Write an instance file.
    Gen(GenArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// alg1, ucb, ucb-blind, etc-oracle or uniform.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "gap-floor")]
    gap_floor: Option<f64>,
    /// Required for etc-oracle; defaults to 2^17 otherwise.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results directory; defaults to out/<policy>-T<horizon>-s<seed>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated rounds; defaults to 2^7, 2^8, … up to the horizon.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
}

#[derive(Args, Debug, Default)]
struct LpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long = "gap-floor")]
    gap_floor: Option<f64>,
    /// Also report the worst-case solution over means within this distance.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BoundFamily {
    /// Anytime deviation of the weighted mean.
    #[value(name = "3")]
    Anytime,
    /// Stopping at the first time the weighted count enters [L, H].
    #[value(name = "2a")]
    Interval,
    /// Stopping at the first time the weighted count reaches r.
    #[value(name = "2b")]
    Threshold,
    All,
}

#[derive(Args, Debug, Default)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    lemma: Option<BoundFamily>,
    #[arg(long = "L")]
    lower: Option<f64>,
    #[arg(long = "H")]
    upper: Option<f64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "sigma-min")]
    sigma_min: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Standard,
    Full,
    Graph,
    Random,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    /// Comma-separated means; for `random` they default to uniform draws in [0, 1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    means: Option<Vec<f64>>,
    /// Number of arms, for `random` without --means.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Undirected edges `i-j` (0-based) for `graph`; self-loops are implied.
    #[arg(long, value_delimiter = ',')]
    edges: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    low: f64,
    #[arg(long, default_value_t = 2.0)]
    high: f64,
    #[arg(long = "p-infinite", default_value_t = 0.5)]
    p_infinite: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Lp(a) => cmd_lp(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `BANDIT_SIM_THREADS` caps the worker pool; unset or 0 leaves rayon's default.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("BANDIT_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| {
        format!("BANDIT_SIM_THREADS must be a non-negative integer, got {raw:?}")
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure thread pool")?;
    }
    Ok(())
}

fn read_instance(path: Option<PathBuf>) -> Result<Instance<f64>, Failure> {
    let path = path.ok_or_else(|| invalid(anyhow!("--instance is required")))?;
    load_instance(&path).map_err(invalid)
}

/// Fully resolved `run` settings after merging flags over the config file.
#[derive(Debug, PartialEq)]
struct RunSettings {
    instance: Option<PathBuf>,
    policy: PolicyKind,
    params: PolicyParams<f64>,
    horizon: u64,
    reps: usize,
    seed: u64,
    out: PathBuf,
    checkpoints: Option<Vec<u64>>,
}

fn resolve_run(a: RunArgs) -> Result<RunSettings, Failure> {
    let file: config::RunFile = config::load(a.config.as_deref()).map_err(invalid)?;
    let policy_name = a.policy.or(file.policy).unwrap_or_else(|| "alg1".into());
    let policy = PolicyKind::parse(&policy_name)
        .ok_or_else(|| invalid(anyhow!("unknown policy {policy_name:?}")))?;
    let horizon = match a.horizon.or(file.horizon) {
        Some(h) => h,
        None if policy == PolicyKind::EtcOracle => {
            return Err(invalid(anyhow!("etc-oracle needs an explicit --horizon")))
        }
        None => DEFAULT_HORIZON,
    };
    let params = PolicyParams {
        alpha: a.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
        gamma: a.gamma.or(file.gamma).unwrap_or(DEFAULT_GAMMA),
        gap_floor: a.gap_floor.or(file.gap_floor).unwrap_or(DEFAULT_GAP_FLOOR),
    };
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let out = a.out.or(file.out).unwrap_or_else(|| {
        PathBuf::from("out").join(format!("{}-T{horizon}-s{seed}", policy.as_str()))
    });
    Ok(RunSettings {
        instance: a.instance.or(file.instance),
        policy,
        params,
        horizon,
        reps: a.reps.or(file.reps).unwrap_or(32),
        seed,
        out,
        checkpoints: a.checkpoints.or(file.checkpoints),
    })
}

fn cmd_run(a: RunArgs) -> Outcome {
    let s = resolve_run(a)?;
    let instance = read_instance(s.instance)?;
    let mut cfg = RunConfig::new(instance, s.policy, s.horizon);
    cfg.params = s.params;
    cfg.replications = s.reps;
    cfg.base_seed = s.seed;
    cfg.record_labels = true;
    cfg.checkpoints = s
        .checkpoints
        .unwrap_or_else(|| geometric_checkpoints(s.horizon));
    cfg.validate().map_err(invalid)?;

    let traces = harness::run(&cfg).map_err(runtime)?;
    if s.policy == PolicyKind::Alg1 {
        for tr in &traces {
            if !harness::check_counting_invariant(tr, cfg.params.gamma) {
                log::warn!(
                    "rep {}: {} uniform rounds exceed the counting bound for {} exploration rounds",
                    tr.rep_index,
                    tr.label_counts.uniform,
                    tr.label_counts.exploration()
                );
            }
        }
    }
    let table = if traces.len() >= 2 {
        harness::aggregate(&traces, &cfg.checkpoints).map_err(runtime)?
    } else {
        single_row_table(&traces[0])
    };
    harness::write_run_directory(&s.out, &cfg, &traces, &table).map_err(runtime)?;

    println!("{}", harness::CSV_HEADER);
    for r in &table {
        println!(
            "{},{:.4},{:.4},{:.4}",
            r.t, r.mean_regret, r.stderr, r.regret_over_logt
        );
    }
    eprintln!("wrote {}", s.out.display());
    Ok(())
}

/// With one replication there is no spread; report it as zero.
fn single_row_table(tr: &harness::RegretTrace) -> Vec<harness::AggregateRow> {
    tr.checkpoints
        .iter()
        .zip(&tr.regret)
        .map(|(&t, &r)| harness::AggregateRow {
            t,
            mean_regret: r,
            stderr: 0.0,
            regret_over_logt: r / (t as f64).ln(),
        })
        .collect()
}

#[derive(Serialize)]
struct LpReport {
    c: Vec<f64>,
    objective: f64,
    active_constraints: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_worst_case: Option<EpsilonReport>,
}

#[derive(Serialize)]
struct EpsilonReport {
    epsilon: f64,
    trials: usize,
    c: Vec<f64>,
}

fn cmd_lp(a: LpArgs) -> Outcome {
    let file: config::LpFile = config::load(a.config.as_deref()).map_err(invalid)?;
    let instance = read_instance(a.instance.or(file.instance))?;
    let gap_floor = a.gap_floor.or(file.gap_floor).unwrap_or(DEFAULT_GAP_FLOOR);
    if !(gap_floor > 0.0) {
        return Err(invalid(anyhow!("--gap-floor must be positive")));
    }
    let cs = lp::build_constraints(instance.means(), instance.feedback(), gap_floor);
    let sol = lp::solve(&cs, &instance.gaps().deltas).map_err(runtime)?;
    let active = lp::active_constraints(&cs, &sol.c, 1e-9);

    let epsilon_worst_case = match a.epsilon.or(file.epsilon) {
        None => None,
        Some(eps) if !(eps >= 0.0) => return Err(invalid(anyhow!("--epsilon must be >= 0"))),
        Some(eps) => {
            let trials = a.trials.or(file.trials).unwrap_or(1000);
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed.or(file.seed).unwrap_or(0));
            let c = lp::epsilon_worst_case(&instance, eps, trials, gap_floor, &mut rng)
                .map_err(runtime)?;
            Some(EpsilonReport {
                epsilon: eps,
                trials,
                c,
            })
        }
    };
    let report = LpReport {
        c: sol.c,
        objective: sol.objective,
        active_constraints: active,
        epsilon_worst_case,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(runtime)?
    );
    Ok(())
}

enum Check {
    Anytime(AnytimeCase),
    Stopping(StoppingCase),
}

impl Check {
    fn describe(&self) -> (String, String) {
        match self {
            Check::Anytime(c) => (
                "3".into(),
                format!(
                    "sigma_min={} alpha={} t={} rule={:?}",
                    c.sigma_min, c.alpha, c.t, c.rule
                ),
            ),
            Check::Stopping(c) => match c.stopping {
                StoppingRule::Interval {
                    lower,
                    upper,
                    alpha,
                } => (
                    "2a".into(),
                    format!(
                        "L={lower} H={upper} alpha={alpha} t={} rule={:?}",
                        c.t, c.rule
                    ),
                ),
                StoppingRule::Threshold { r, eps } => (
                    "2b".into(),
                    format!("r={r} eps={eps} t={} rule={:?}", c.t, c.rule),
                ),
            },
        }
    }

    fn run(&self, trials: u64, seed: u64) -> anyhow::Result<McOutcome> {
        Ok(match self {
            Check::Anytime(c) => c.run(trials, seed)?,
            Check::Stopping(c) => c.run(trials, seed)?,
        })
    }
}

fn verify_checks(a: &VerifyArgs, file: &config::VerifyFile) -> Result<Vec<Check>, Failure> {
    let lemma = match (a.lemma, &file.lemma) {
        (Some(l), _) => l,
        (None, Some(s)) => BoundFamily::from_str(s, true)
            .map_err(|_| invalid(anyhow!("unknown lemma {s:?}; use 3, 2a, 2b or all")))?,
        (None, None) => BoundFamily::All,
    };
    let lower = a.lower.or(file.lower);
    let upper = a.upper.or(file.upper);
    let t = a.t.or(file.t);
    let alpha = a.alpha.or(file.alpha);
    let r = a.r.or(file.r);
    let eps = a.eps.or(file.eps);
    let sigma_min = a.sigma_min.or(file.sigma_min);

    if let Some(al) = alpha {
        if !(al > 0.0) {
            return Err(invalid(anyhow!("--alpha must be positive, got {al}")));
        }
    }
    if let Some(t) = t {
        if t < 2 {
            return Err(invalid(anyhow!("--t must be at least 2")));
        }
    }
    if let Some(s) = sigma_min {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(anyhow!("--sigma-min must be positive and finite")));
        }
    }

    let rule = SourceRule::ChaseDeviation;
    let mut checks = Vec::new();
    if matches!(lemma, BoundFamily::Anytime | BoundFamily::All) {
        if sigma_min.is_some()
            || (lemma == BoundFamily::Anytime && (alpha.is_some() || t.is_some()))
        {
            for rule in [SourceRule::ChaseDeviation, SourceRule::AvoidDeviation] {
                checks.push(Check::Anytime(AnytimeCase {
                    sigma_min: sigma_min.unwrap_or(1.0),
                    alpha: alpha.unwrap_or(DEFAULT_ALPHA),
                    t: t.unwrap_or(100),
                    rule,
                }));
            }
        } else {
            checks.extend(anytime_grid().into_iter().map(Check::Anytime));
        }
    }
    let grid = stopping_grid();
    if matches!(lemma, BoundFamily::Interval | BoundFamily::All) {
        if lower.is_some()
            || upper.is_some()
            || (lemma == BoundFamily::Interval && (alpha.is_some() || t.is_some()))
        {
            let stopping = StoppingRule::Interval {
                lower: lower.unwrap_or(1.0),
                upper: upper.unwrap_or(2.0),
                alpha: alpha.unwrap_or(4.0),
            };
            stopping.validate().map_err(invalid)?;
            checks.push(Check::Stopping(StoppingCase {
                stopping,
                t: t.unwrap_or(100),
                rule,
            }));
        } else {
            checks.extend(
                grid.iter()
                    .filter(|c| matches!(c.stopping, StoppingRule::Interval { .. }))
                    .map(|&c| Check::Stopping(c)),
            );
        }
    }
    if matches!(lemma, BoundFamily::Threshold | BoundFamily::All) {
        if r.is_some() || eps.is_some() || (lemma == BoundFamily::Threshold && t.is_some()) {
            let stopping = StoppingRule::Threshold {
                r: r.unwrap_or(8.0),
                eps: eps.unwrap_or(1.0),
            };
            stopping.validate().map_err(invalid)?;
            checks.push(Check::Stopping(StoppingCase {
                stopping,
                t: t.unwrap_or(100),
                rule,
            }));
        } else {
            checks.extend(
                grid.iter()
                    .filter(|c| matches!(c.stopping, StoppingRule::Threshold { .. }))
                    .map(|&c| Check::Stopping(c)),
            );
        }
    }
    Ok(checks)
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let file: config::VerifyFile = config::load(a.config.as_deref()).map_err(invalid)?;
    let checks = verify_checks(&a, &file)?;
    let trials = a.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = a.seed.or(file.seed).unwrap_or(0);

    println!(
        "{:<5} {:<52} {:>10} {:>10} {:>10}  status",
        "lemma", "parameters", "rate", "bound", "band"
    );
    let mut failed = 0;
    for check in &checks {
        let (lemma, params) = check.describe();
        let out = check.run(trials, seed).map_err(invalid)?;
        let status = match out.passed() {
            None => "not-run",
            Some(true) => "pass",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
        };
        let rate = out
            .empirical_rate()
            .map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        println!(
            "{lemma:<5} {params:<52} {rate:>10} {:>10.3e} {:>10.3e}  {status}",
            out.bound,
            out.band()
        );
    }
    if failed > 0 {
        return Err(runtime(anyhow!(
            "{failed} of {} checks exceeded their band",
            checks.len()
        )));
    }
    Ok(())
}

fn parse_edges(k: usize, edges: &[String]) -> anyhow::Result<Vec<Vec<bool>>> {
    let mut adj = vec![vec![false; k]; k];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in edges {
        let (a, b) = e
            .split_once('-')
            .ok_or_else(|| anyhow!("edge {e:?} is not of the form i-j"))?;
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a >= k || b >= k {
            return Err(anyhow!("edge {e:?} names an arm outside 0..{k}"));
        }
        adj[a][b] = true;
        adj[b][a] = true;
    }
    Ok(adj)
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let means = match (&a.means, a.k, a.family) {
        (Some(m), _, _) => m.clone(),
        (None, Some(k), Family::Random) => (0..k).map(|_| rng.random::<f64>()).collect(),
        _ => return Err(invalid(anyhow!("--means is required (or --k for random)"))),
    };
    let k = means.len();
    let feedback = match a.family {
        Family::Standard => FeedbackMatrix::standard(k, a.sigma),
        Family::Full => FeedbackMatrix::full(k, a.sigma),
        Family::Graph => {
            FeedbackMatrix::graph(&parse_edges(k, &a.edges).map_err(invalid)?, a.sigma)
        }
        Family::Random => {
            let cfg = RandomFeedback {
                low: a.low,
                high: a.high,
                p_infinite: a.p_infinite,
            };
            if !(cfg.low > 0.0 && cfg.high >= cfg.low && (0.0..=1.0).contains(&cfg.p_infinite)) {
                return Err(invalid(anyhow!(
                    "need 0 < low <= high and p-infinite in [0, 1]"
                )));
            }
            FeedbackMatrix::random(k, &cfg, &mut rng)
        }
    }
    .map_err(invalid)?;
    let instance = Instance::new(means, feedback).map_err(invalid)?;
    let text = instance_to_json(&instance);
    match a.out {
        Some(path) => write_file(&path, &text).map_err(runtime)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, format!("{text}\n"))
        .with_context(|| format!("cannot write {}", path.display()))
}
