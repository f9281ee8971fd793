//! Arm-selection policies.
//!
//! [`select_arm`] is the asymptotically optimal policy: after one pass of
//! best-source initialization it exploits greedily whenever the scaled pull
//! counts already satisfy the estimated information constraints, and
//! otherwise explores, either uniformly (to keep every estimate improving) or
//! along the estimated LP solution. The remaining policies are baselines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{FeedbackMatrix, Instance, Observation};
use crate::estimator::{radius, ArmEstimator};
use crate::lp::{self, LpError};
use crate::scalar::{argmax_first, argmin_first, Real};

pub const DEFAULT_ALPHA: f64 = 4.5;
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("alpha must exceed 4, got {0}")]
    InvalidAlpha(f64),
    #[error("gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("gap floor must be positive, got {0}")]
    InvalidGapFloor(f64),
    #[error("LP-dictated round {t} found no arm below its target")]
    NoLpDeficitArm { t: u64 },
    #[error("arm {arm} has no informative sample at round {t}")]
    MissingEstimate { t: u64, arm: usize },
    #[error("LP failure at round {t}: {source}")]
    Lp { t: u64, source: LpError },
}

/// Which branch chose the arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Rounds `1..=K`: best-source initialization.
    Init,
    /// Greedy exploitation.
    GreedyA,
    /// Uniform exploration toward the least-informed arm.
    UniformB,
    /// Exploration dictated by the estimated LP.
    LpC,
    /// Any round of a baseline policy after initialization.
    Baseline,
}

impl CaseLabel {
    pub fn is_exploration(self) -> bool {
        matches!(self, CaseLabel::UniformB | CaseLabel::LpC)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub arm: usize,
    pub label: CaseLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams<T> {
    pub alpha: T,
    pub gamma: T,
    pub gap_floor: T,
}

impl<T: Real> Default for PolicyParams<T> {
    fn default() -> Self {
        PolicyParams {
            alpha: T::of(DEFAULT_ALPHA),
            gamma: T::of(DEFAULT_GAMMA),
            gap_floor: T::of(lp::DEFAULT_GAP_FLOOR),
        }
    }
}

impl<T: Real> PolicyParams<T> {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        if !(self.alpha > T::of(4.0)) || !self.alpha.is_finite() {
            return Err(PolicyError::InvalidAlpha(f(self.alpha)));
        }
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return Err(PolicyError::InvalidGamma(f(self.gamma)));
        }
        if !(self.gap_floor > T::zero()) || !self.gap_floor.is_finite() {
            return Err(PolicyError::InvalidGapFloor(f(self.gap_floor)));
        }
        Ok(())
    }
}

/// Uniform-exploration schedule `β(x) = x^γ / (2 σ̄²)`.
pub fn beta<T: Real>(x: T, gamma: T, sigma_bar: T) -> T {
    x.powf(gamma) / (T::of(2.0) * sigma_bar * sigma_bar)
}

/// Everything a policy may look at: round index, pull counts, estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState<T> {
    /// Current round, 1-based.
    pub t: u64,
    pub pull_counts: Vec<u64>,
    /// Estimators fed by every observation, side observations included.
    pub estimators: Vec<ArmEstimator<T>>,
    /// Estimators fed only by an arm's own pulls.
    pub own_estimators: Vec<ArmEstimator<T>>,
    /// Number of exploration rounds so far.
    pub n_e: u64,
}

impl<T: Real> PolicyState<T> {
    pub fn new(k: usize) -> Self {
        PolicyState {
            t: 1,
            pull_counts: vec![0; k],
            estimators: vec![ArmEstimator::new(); k],
            own_estimators: vec![ArmEstimator::new(); k],
            n_e: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn weighted_counts(&self) -> Vec<T> {
        self.estimators.iter().map(|e| e.weighted_count).collect()
    }

    /// `μ̂(t)`; fails if some arm has no information yet.
    pub fn mean_estimates(&self) -> Result<Vec<T>, PolicyError> {
        self.estimators
            .iter()
            .enumerate()
            .map(|(arm, e)| {
                e.mean()
                    .map_err(|_| PolicyError::MissingEstimate { t: self.t, arm })
            })
            .collect()
    }

    /// Records the feedback of the round and advances `t`.
    pub fn observe(
        &mut self,
        obs: &Observation<T>,
        label: CaseLabel,
        feedback: &FeedbackMatrix<T>,
    ) {
        let arm = obs.arm_pulled;
        for (j, v) in obs.values.iter().enumerate() {
            if let Some(x) = *v {
                let s = feedback.sigma(arm, j);
                self.estimators[j].update(x, s);
                if j == arm {
                    self.own_estimators[j].update(x, s);
                }
            }
        }
        self.pull_counts[arm] += 1;
        if label.is_exploration() {
            self.n_e += 1;
        }
        self.t += 1;
    }

    /// Consistency checks between counts and estimators.
    ///
    /// `after_best_source_init` additionally demands `ñ_i ≥ 1/(σ_i^min)²` once
    /// the first `K` rounds are over.
    pub fn check_invariants(
        &self,
        feedback: &FeedbackMatrix<T>,
        after_best_source_init: bool,
    ) -> Result<(), String> {
        let k = self.k();
        let pulls: u64 = self.pull_counts.iter().sum();
        if pulls != self.t - 1 {
            return Err(format!("sum of pulls {pulls} != t - 1 = {}", self.t - 1));
        }
        let rel = T::of(1e-9);
        for i in 0..k {
            let expected = (0..k).fold(T::zero(), |acc, j| {
                acc + T::of(self.pull_counts[j] as f64) * feedback.precision(j, i)
            });
            let got = self.estimators[i].weighted_count;
            if (got - expected).abs() > rel * expected.max(T::one()) {
                return Err(format!("arm {i}: weighted count {got} != {expected}"));
            }
            if after_best_source_init && self.t > k as u64 {
                let floor = crate::environment::precision(feedback.sigma_min(i));
                if got < floor * (T::one() - rel) {
                    return Err(format!(
                        "arm {i}: weighted count {got} below 1/σmin² = {floor}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Init-phase choice: in round `t ≤ K`, the least noisy source of arm `t`.
fn init_decision<T: Real>(
    state: &PolicyState<T>,
    feedback: &FeedbackMatrix<T>,
) -> Option<Decision> {
    let k = state.k() as u64;
    (state.t <= k).then(|| Decision {
        arm: feedback.best_source((state.t - 1) as usize),
        label: CaseLabel::Init,
    })
}

/// One decision of the LP-tracking policy.
pub fn select_arm<T: Real>(
    state: &PolicyState<T>,
    feedback: &FeedbackMatrix<T>,
    params: &PolicyParams<T>,
) -> Result<Decision, PolicyError> {
    if let Some(d) = init_decision(state, feedback) {
        return Ok(d);
    }
    let t = state.t;
    let k = state.k();
    let means = state.mean_estimates()?;
    let ln_t = T::of(t as f64).ln();
    let scale = T::of(4.0) * params.alpha * ln_t;

    let cs = lp::build_constraints(&means, feedback, params.gap_floor);
    let scaled: Vec<T> = state
        .pull_counts
        .iter()
        .map(|&n| T::of(n as f64) / scale)
        .collect();
    if lp::membership(&scaled, &cs) {
        return Ok(Decision {
            arm: argmax_first(&means).expect("k >= 2"),
            label: CaseLabel::GreedyA,
        });
    }

    let weighted = state.weighted_counts();
    let threshold =
        beta(T::of(state.n_e as f64), params.gamma, feedback.sigma_bar()) / T::of(k as f64);
    let least = argmin_first(&weighted).expect("k >= 2");
    if weighted[least] < threshold {
        return Ok(Decision {
            arm: feedback.best_source(least),
            label: CaseLabel::UniformB,
        });
    }

    let deltas = crate::environment::gaps(&means).deltas;
    let sol = lp::solve(&cs, &deltas).map_err(|source| PolicyError::Lp { t, source })?;
    let mut best: Option<(usize, T)> = None;
    for (i, (&n, &c)) in state.pull_counts.iter().zip(&sol.c).enumerate() {
        let target = scale * c;
        let n = T::of(n as f64);
        if n < target {
            let deficit = target - n;
            if best.is_none_or(|(_, d)| deficit > d) {
                best = Some((i, deficit));
            }
        }
    }
    match best {
        Some((arm, _)) => Ok(Decision {
            arm,
            label: CaseLabel::LpC,
        }),
        None => Err(PolicyError::NoLpDeficitArm { t }),
    }
}

/// UCB index policy. With `blind`, only the arm's own samples are used.
pub fn ucb_select<T: Real>(
    state: &PolicyState<T>,
    feedback: &FeedbackMatrix<T>,
    alpha: T,
    blind: bool,
) -> Decision {
    let k = state.k();
    if blind {
        if state.t <= k as u64 {
            return Decision {
                arm: (state.t - 1) as usize,
                label: CaseLabel::Init,
            };
        }
    } else if let Some(d) = init_decision(state, feedback) {
        return d;
    }
    let source = if blind {
        &state.own_estimators
    } else {
        &state.estimators
    };
    // An arm with no usable sample has an unbounded index.
    if let Some(arm) = source.iter().position(|e| !e.has_information()) {
        return Decision {
            arm,
            label: CaseLabel::Baseline,
        };
    }
    let index: Vec<T> = source
        .iter()
        .map(|e| e.mean().expect("informative") + radius(e.weighted_count, state.t, alpha))
        .collect();
    Decision {
        arm: argmax_first(&index).expect("k >= 2"),
        label: CaseLabel::Baseline,
    }
}

/// Round-robin over the arms.
pub fn uniform_select<T: Real>(state: &PolicyState<T>) -> Decision {
    let k = state.k() as u64;
    Decision {
        arm: ((state.t - 1) % k) as usize,
        label: if state.t <= k {
            CaseLabel::Init
        } else {
            CaseLabel::Baseline
        },
    }
}

/// Explore-then-commit with oracle access to the true LP solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtcSchedule {
    /// `⌈c*_i ln T⌉`, possibly cut short by the horizon.
    pub pulls: Vec<u64>,
    pub commit_arm: usize,
    pub horizon: u64,
    /// Set when the exploration budget exceeded the horizon.
    pub truncated: bool,
}

impl EtcSchedule {
    /// Arm played in round `t` (1-based).
    pub fn arm_at(&self, t: u64) -> usize {
        let mut end = 0;
        for (arm, &n) in self.pulls.iter().enumerate() {
            end += n;
            if t <= end {
                return arm;
            }
        }
        self.commit_arm
    }

    pub fn exploration_length(&self) -> u64 {
        self.pulls.iter().sum()
    }
}

/// `⌈c_i · ln T⌉` for each arm.
pub fn etc_pulls<T: Real>(c: &[T], ln_horizon: T) -> Vec<u64> {
    c.iter()
        .map(|&ci| (ci * ln_horizon).ceil().to_u64().unwrap_or(u64::MAX))
        .collect()
}

pub fn etc_oracle_schedule<T: Real>(
    instance: &Instance<T>,
    horizon: u64,
    gap_floor: T,
) -> Result<EtcSchedule, LpError> {
    let c = lp::solve_at(instance.means(), instance.feedback(), gap_floor)?.c;
    let mut pulls = etc_pulls(&c, T::of(horizon as f64).ln());
    let mut remaining = horizon;
    let mut truncated = false;
    for p in pulls.iter_mut() {
        if *p > remaining {
            *p = remaining;
            truncated = true;
        }
        remaining -= *p;
    }
    Ok(EtcSchedule {
        pulls,
        commit_arm: instance.optimal_arm(),
        horizon,
        truncated,
    })
}

/// Policy identifiers exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// The LP-tracking policy.
    Alg1,
    /// UCB on the side-information estimators.
    Ucb,
    /// UCB on own-pull samples only.
    UcbBlind,
    EtcOracle,
    Uniform,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Alg1 => "alg1",
            PolicyKind::Ucb => "ucb",
            PolicyKind::UcbBlind => "ucb-blind",
            PolicyKind::EtcOracle => "etc-oracle",
            PolicyKind::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "alg1" => PolicyKind::Alg1,
            "ucb" => PolicyKind::Ucb,
            "ucb-blind" => PolicyKind::UcbBlind,
            "etc-oracle" => PolicyKind::EtcOracle,
            "uniform" => PolicyKind::Uniform,
            _ => return None,
        })
    }

    /// Whether the first `K` rounds use best-source initialization.
    pub fn uses_best_source_init(self) -> bool {
        matches!(self, PolicyKind::Alg1 | PolicyKind::Ucb)
    }
}

/// A policy bound to an instance, ready to be stepped.
#[derive(Debug, Clone)]
pub enum Driver<T> {
    Alg1(PolicyParams<T>),
    Ucb { alpha: T, blind: bool },
    Etc(EtcSchedule),
    Uniform,
}

impl<T: Real> Driver<T> {
    pub fn new(
        kind: PolicyKind,
        params: PolicyParams<T>,
        instance: &Instance<T>,
        horizon: u64,
    ) -> Result<Self, PolicyError> {
        Ok(match kind {
            PolicyKind::Alg1 => {
                params.validate()?;
                Driver::Alg1(params)
            }
            PolicyKind::Ucb | PolicyKind::UcbBlind => {
                params.validate()?;
                Driver::Ucb {
                    alpha: params.alpha,
                    blind: kind == PolicyKind::UcbBlind,
                }
            }
            PolicyKind::EtcOracle => Driver::Etc(
                etc_oracle_schedule(instance, horizon, params.gap_floor)
                    .map_err(|source| PolicyError::Lp { t: 0, source })?,
            ),
            PolicyKind::Uniform => Driver::Uniform,
        })
    }

    pub fn select(
        &self,
        state: &PolicyState<T>,
        feedback: &FeedbackMatrix<T>,
    ) -> Result<Decision, PolicyError> {
        match self {
            Driver::Alg1(params) => select_arm(state, feedback, params),
            Driver::Ucb { alpha, blind } => Ok(ucb_select(state, feedback, *alpha, *blind)),
            Driver::Etc(schedule) => Ok(Decision {
                arm: schedule.arm_at(state.t),
                label: CaseLabel::Baseline,
            }),
            Driver::Uniform => Ok(uniform_select(state)),
        }
    }
}
