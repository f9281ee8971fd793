//! Seeded, replicated regret simulation.
//!
//! Each replication owns a ChaCha8 stream keyed by `(base_seed, rep_index)`,
//! so results do not depend on thread scheduling. Regret is pseudo-regret
//! `Σ_i N_i(t) Δ_i`, evaluated from the pull counts at every checkpoint.

mod output;
pub mod verify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvError, Instance};
use crate::estimator::radius;
use crate::policy::{CaseLabel, Driver, PolicyError, PolicyKind, PolicyParams, PolicyState};

pub use output::{
    read_json, write_csv, write_json, write_run_directory, ConfigEcho, RunResults, CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("replication {rep}, round {round}: {source} (state: {snapshot})")]
    Episode {
        rep: u64,
        round: u64,
        source: PolicyError,
        snapshot: String,
    },
    #[error("replication {rep}, round {round}: invariant violated: {detail}")]
    Invariant {
        rep: u64,
        round: u64,
        detail: String,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("traces do not share the checkpoint grid")]
    MismatchedCheckpoints,
    #[error("need at least 2 traces to aggregate, got {0}")]
    TooFewTraces(usize),
    #[error("nothing to write")]
    EmptyResults,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

/// Everything needed to reproduce a batch of replications.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: Instance<f64>,
    pub policy: PolicyKind,
    pub params: PolicyParams<f64>,
    pub horizon: u64,
    pub replications: usize,
    pub base_seed: u64,
    /// Rounds after which cumulative regret is recorded; sorted, in `[2, T]`.
    pub checkpoints: Vec<u64>,
    /// Keep the run-length-encoded per-round labels in each trace.
    pub record_labels: bool,
    /// Accuracy used for the LP-round diagnostic.
    pub diagnostic_eps: f64,
}

impl RunConfig {
    pub fn new(instance: Instance<f64>, policy: PolicyKind, horizon: u64) -> Self {
        RunConfig {
            instance,
            policy,
            params: PolicyParams::default(),
            horizon,
            replications: 1,
            base_seed: 0,
            checkpoints: geometric_checkpoints(horizon),
            record_labels: false,
            diagnostic_eps: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.instance.validate()?;
        let k = self.instance.k() as u64;
        if self.horizon < k {
            return Err(HarnessError::Config(format!(
                "horizon {} is shorter than the {k} initialization rounds",
                self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config("replications must be >= 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(HarnessError::Config("checkpoint grid is empty".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if self.checkpoints[0] < 2 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(HarnessError::Config(format!(
                "checkpoints must lie in [2, {}]",
                self.horizon
            )));
        }
        if self.policy != PolicyKind::EtcOracle && self.policy != PolicyKind::Uniform {
            self.params.validate()?;
        }
        Ok(())
    }
}

/// `{2^7, 2^8, …}` up to and including `horizon`.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (7..64)
        .map(|e| 1u64 << e)
        .take_while(|&c| c <= horizon)
        .collect();
    if out.last() != Some(&horizon) && horizon >= 2 {
        out.push(horizon);
    }
    out
}

/// Stream for one replication.
pub fn replication_rng(base_seed: u64, rep_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(rep_index);
    rng
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub init: u64,
    pub greedy: u64,
    pub uniform: u64,
    pub lp: u64,
    pub baseline: u64,
}

impl LabelCounts {
    fn bump(&mut self, label: CaseLabel) {
        match label {
            CaseLabel::Init => self.init += 1,
            CaseLabel::GreedyA => self.greedy += 1,
            CaseLabel::UniformB => self.uniform += 1,
            CaseLabel::LpC => self.lp += 1,
            CaseLabel::Baseline => self.baseline += 1,
        }
    }

    pub fn exploration(&self) -> u64 {
        self.uniform + self.lp
    }
}

/// Per-round checks that need the true means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Greedy rounds in which every estimate lay within its confidence radius.
    pub greedy_confident: u64,
    /// Of those, rounds that played an optimal arm.
    pub greedy_confident_optimal: u64,
    /// LP-dictated rounds per arm with every estimate within its radius and
    /// within `diagnostic_eps` of the truth.
    pub lp_accurate_pulls: Vec<u64>,
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub rep_index: u64,
    pub checkpoints: Vec<u64>,
    /// Cumulative pseudo-regret after each checkpoint round.
    pub regret: Vec<f64>,
    /// Run-length-encoded labels, when recorded.
    pub labels: Vec<(CaseLabel, u64)>,
    pub label_counts: LabelCounts,
    pub final_pull_counts: Vec<u64>,
    pub final_n_e: u64,
    pub diagnostics: Diagnostics,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        *self.regret.last().expect("non-empty checkpoint grid")
    }
}

/// `Σ_i N_i Δ_i`, summed in arm order.
pub fn regret_from_counts(counts: &[u64], deltas: &[f64]) -> f64 {
    counts
        .iter()
        .zip(deltas)
        .fold(0.0, |acc, (&n, &d)| acc + n as f64 * d)
}

/// Simulates one replication.
pub fn run_episode(config: &RunConfig, rep_index: u64) -> Result<RegretTrace, HarnessError> {
    let instance = &config.instance;
    let feedback = instance.feedback();
    let k = instance.k();
    let true_means = instance.means();
    let deltas = instance.gaps().deltas;
    let driver = Driver::new(config.policy, config.params, instance, config.horizon)?;
    let mut rng = replication_rng(config.base_seed, rep_index);
    let mut state = PolicyState::<f64>::new(k);

    let mut regret = Vec::with_capacity(config.checkpoints.len());
    let mut next_checkpoint = config.checkpoints.iter().peekable();
    let mut labels: Vec<(CaseLabel, u64)> = Vec::new();
    let mut counts = LabelCounts::default();
    let mut diag = Diagnostics {
        lp_accurate_pulls: vec![0; k],
        ..Diagnostics::default()
    };

    for round in 1..=config.horizon {
        let decision = driver
            .select(&state, feedback)
            .map_err(|source| HarnessError::Episode {
                rep: rep_index,
                round,
                source,
                snapshot: format!(
                    "pulls={:?} n_e={} weighted={:?}",
                    state.pull_counts,
                    state.n_e,
                    state.weighted_counts()
                ),
            })?;

        if matches!(decision.label, CaseLabel::GreedyA | CaseLabel::LpC) {
            let means = state.mean_estimates()?;
            let confident = (0..k).all(|i| {
                (means[i] - true_means[i]).abs()
                    <= radius(
                        state.estimators[i].weighted_count,
                        round,
                        config.params.alpha,
                    )
            });
            if confident && decision.label == CaseLabel::GreedyA {
                diag.greedy_confident += 1;
                if deltas[decision.arm] == 0.0 {
                    diag.greedy_confident_optimal += 1;
                }
            }
            if confident
                && decision.label == CaseLabel::LpC
                && (0..k).all(|i| (means[i] - true_means[i]).abs() <= config.diagnostic_eps)
            {
                diag.lp_accurate_pulls[decision.arm] += 1;
            }
        }

        let obs = instance.pull(decision.arm, &mut rng);
        state.observe(&obs, decision.label, feedback);
        counts.bump(decision.label);
        if config.record_labels {
            match labels.last_mut() {
                Some((l, n)) if *l == decision.label => *n += 1,
                _ => labels.push((decision.label, 1)),
            }
        }

        if cfg!(debug_assertions) {
            state
                .check_invariants(feedback, config.policy.uses_best_source_init())
                .map_err(|detail| HarnessError::Invariant {
                    rep: rep_index,
                    round,
                    detail,
                })?;
        }

        if next_checkpoint.peek() == Some(&&round) {
            next_checkpoint.next();
            regret.push(regret_from_counts(&state.pull_counts, &deltas));
        }
    }

    Ok(RegretTrace {
        rep_index,
        checkpoints: config.checkpoints.clone(),
        regret,
        labels,
        label_counts: counts,
        final_pull_counts: state.pull_counts,
        final_n_e: state.n_e,
        diagnostics: diag,
    })
}

/// Runs every replication in parallel on the current rayon pool; results come
/// back in replication order.
pub fn run(config: &RunConfig) -> Result<Vec<RegretTrace>, HarnessError> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_episode(config, rep))
        .collect()
}

/// One row of the aggregated regret table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: u64,
    pub mean_regret: f64,
    pub stderr: f64,
    pub regret_over_logt: f64,
}

/// Mean and standard error of the regret at each checkpoint.
pub fn aggregate(
    traces: &[RegretTrace],
    checkpoints: &[u64],
) -> Result<Vec<AggregateRow>, HarnessError> {
    if traces.len() < 2 {
        return Err(HarnessError::TooFewTraces(traces.len()));
    }
    if traces.iter().any(|tr| tr.checkpoints != checkpoints) {
        return Err(HarnessError::MismatchedCheckpoints);
    }
    let n = traces.len() as f64;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let mean = traces.iter().map(|tr| tr.regret[c]).sum::<f64>() / n;
            let var = traces
                .iter()
                .map(|tr| (tr.regret[c] - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            AggregateRow {
                t,
                mean_regret: mean,
                stderr: (var / n).sqrt(),
                regret_over_logt: mean / (t as f64).ln(),
            }
        })
        .collect())
}

/// `#uniform ≤ ½ (#uniform + #lp)^γ + 1`.
pub fn counting_invariant_holds(uniform: u64, lp: u64, gamma: f64) -> bool {
    uniform as f64 <= 0.5 * ((uniform + lp) as f64).powf(gamma) + 1.0
}

pub fn check_counting_invariant(trace: &RegretTrace, gamma: f64) -> bool {
    counting_invariant_holds(trace.label_counts.uniform, trace.label_counts.lp, gamma)
}

/// Per-arm comparison of accurate LP-dictated pulls against `4α ĉ_j ln T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpBudgetRow {
    pub arm: usize,
    pub pulls: u64,
    pub budget: f64,
    pub within: bool,
}

/// Soft diagnostic: `ĉ` is only a lower estimate of the worst-case solution,
/// so an overrun is reported, not treated as a failure.
pub fn lp_budget_report(
    trace: &RegretTrace,
    c_hat: &[f64],
    alpha: f64,
    horizon: u64,
) -> Vec<LpBudgetRow> {
    let ln_t = (horizon as f64).ln();
    let rows: Vec<LpBudgetRow> = trace
        .diagnostics
        .lp_accurate_pulls
        .iter()
        .zip(c_hat)
        .enumerate()
        .map(|(arm, (&pulls, &c))| {
            let budget = 4.0 * alpha * c * ln_t;
            LpBudgetRow {
                arm,
                pulls,
                budget,
                within: pulls as f64 <= budget,
            }
        })
        .collect();
    for r in rows.iter().filter(|r| !r.within) {
        log::info!(
            "rep {}: arm {} used {} accurate LP rounds, budget {:.1}",
            trace.rep_index,
            r.arm,
            r.pulls,
            r.budget
        );
    }
    rows
}
