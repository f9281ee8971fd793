//! Monte-Carlo checks of the deviation bounds for adaptively sampled
//! weighted means.
//!
//! Every trial draws `Z_τ ~ N(0, σ_τ²)` with `σ_τ` picked by a [`SourceRule`]
//! from the history so far, and tracks `W = Σ Z/σ²` and `ñ = Σ 1/σ²`. Trial
//! `i` uses the ChaCha8 stream `(seed, i)`, so outcomes are reproducible and
//! independent of the thread count.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::replication_rng;
use crate::estimator::{anytime_tail_bound, fixed_schedule_bound, TailBoundForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("interval must satisfy 0 < L < H, got [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("threshold must be non-negative and eps positive, got r = {r}, eps = {eps}")]
    InvalidThreshold { r: f64, eps: f64 },
    #[error("need t >= 2, got {0}")]
    HorizonTooShort(u64),
    #[error("source noise levels must be positive and finite")]
    InvalidSources,
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
}

/// Empirical frequency of a bad event against its theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McOutcome {
    pub trials: u64,
    pub violations: u64,
    pub bound: f64,
}

impl McOutcome {
    /// `None` when no trial ran.
    pub fn empirical_rate(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.violations as f64 / self.trials as f64)
    }

    /// `bound + 3 sqrt(bound (1 − bound) / trials)`.
    pub fn band(&self) -> f64 {
        let b = self.bound.clamp(0.0, 1.0);
        b + 3.0 * (b * (1.0 - b) / self.trials.max(1) as f64).sqrt()
    }

    pub fn passed(&self) -> Option<bool> {
        self.empirical_rate().map(|r| r <= self.band())
    }
}

/// How the next noise level is chosen from the running statistics.
///
/// Source `0` is taken to be the most precise one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SourceRule {
    Fixed(usize),
    Alternating,
    /// Switch to the noisiest source while `|W|/sqrt(ñ) > 1`, so a large
    /// deviation is diluted as slowly as possible.
    ChaseDeviation,
    /// The mirror image: noisy while the deviation is small.
    AvoidDeviation,
}

impl SourceRule {
    fn pick(self, step: u64, w: f64, n: f64, sources: usize) -> usize {
        let noisy = sources - 1;
        let large = n > 0.0 && w.abs() / n.sqrt() > 1.0;
        match self {
            SourceRule::Fixed(s) => s.min(noisy),
            SourceRule::Alternating => (step as usize) % sources,
            SourceRule::ChaseDeviation => {
                if large {
                    noisy
                } else {
                    0
                }
            }
            SourceRule::AvoidDeviation => {
                if large {
                    0
                } else {
                    noisy
                }
            }
        }
    }
}

fn check_sources(sigmas: &[f64]) -> Result<(), VerifyError> {
    if sigmas.is_empty() || sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(VerifyError::InvalidSources);
    }
    Ok(())
}

/// Counts trials for which `event` fires.
fn count<F>(trials: u64, seed: u64, event: F) -> u64
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    (0..trials)
        .into_par_iter()
        .filter(|&i| event(&mut replication_rng(seed, i)))
        .count() as u64
}

fn normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Anytime deviation at round `t`: after one sample from the precise source
/// and `t − 2` adaptively chosen ones, checks
/// `|W/ñ| > sqrt(2α ln t / ñ)` against the bound `2 t^{1−α/2}`.
pub fn verify_anytime_concentration(
    sigmas: &[f64],
    rule: SourceRule,
    t: u64,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<McOutcome, VerifyError> {
    check_sources(sigmas)?;
    if t < 2 {
        return Err(VerifyError::HorizonTooShort(t));
    }
    if !(alpha > 0.0) {
        return Err(VerifyError::InvalidAlpha(alpha));
    }
    let ln_t = (t as f64).ln();
    let violations = count(trials, seed, |rng| {
        let (mut w, mut n) = (0.0, 0.0);
        for step in 0..t - 1 {
            let s = if step == 0 {
                0
            } else {
                rule.pick(step, w, n, sigmas.len())
            };
            let sigma = sigmas[s];
            let p = 1.0 / (sigma * sigma);
            w += normal(rng) * sigma * p;
            n += p;
        }
        (w / n).abs() > (2.0 * alpha * ln_t / n).sqrt()
    });
    Ok(McOutcome {
        trials,
        violations,
        bound: anytime_tail_bound(t, alpha, TailBoundForm::Loose),
    })
}

/// The two stopping-time families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StoppingRule {
    /// Stop the first time `ñ ∈ [lower, upper]`; the event is
    /// `|W| > sqrt(2α ñ ln t)`, bounded by `2 t^{−α L/H}`.
    Interval { lower: f64, upper: f64, alpha: f64 },
    /// Stop the first time `ñ ≥ r`; the event is `|W| > ñ ε`, bounded by
    /// `2 exp(−r ε²/2)`.
    Threshold { r: f64, eps: f64 },
}

impl StoppingRule {
    pub fn validate(&self) -> Result<(), VerifyError> {
        match *self {
            StoppingRule::Interval {
                lower,
                upper,
                alpha,
            } => {
                if !(lower > 0.0 && upper > lower && upper.is_finite()) {
                    return Err(VerifyError::InvalidInterval { lower, upper });
                }
                if !(alpha > 0.0) {
                    return Err(VerifyError::InvalidAlpha(alpha));
                }
            }
            StoppingRule::Threshold { r, eps } => {
                if !(r >= 0.0 && r.is_finite() && eps > 0.0) {
                    return Err(VerifyError::InvalidThreshold { r, eps });
                }
            }
        }
        Ok(())
    }

    pub fn bound(&self, t: u64) -> f64 {
        let raw = match *self {
            StoppingRule::Interval {
                lower,
                upper,
                alpha,
            } => 2.0 * (t as f64).powf(-alpha * lower / upper),
            StoppingRule::Threshold { r, eps } => 2.0 * (-r * eps * eps / 2.0).exp(),
        };
        raw.clamp(0.0, 1.0)
    }

    fn stops(&self, n: f64) -> bool {
        match *self {
            StoppingRule::Interval { lower, upper, .. } => n >= lower && n <= upper,
            StoppingRule::Threshold { r, .. } => n >= r,
        }
    }

    fn deviates(&self, w: f64, n: f64, ln_t: f64) -> bool {
        match *self {
            StoppingRule::Interval { alpha, .. } => w.abs() > (2.0 * alpha * n * ln_t).sqrt(),
            StoppingRule::Threshold { eps, .. } => w.abs() > n * eps,
        }
    }
}

/// Runs up to `t` adaptive samples, stops at the first index that satisfies
/// `stopping`, and records whether the deviation event held there. Trials
/// that never stop count as non-violations.
pub fn verify_stopping_bound(
    stopping: StoppingRule,
    sigmas: &[f64],
    rule: SourceRule,
    t: u64,
    trials: u64,
    seed: u64,
) -> Result<McOutcome, VerifyError> {
    stopping.validate()?;
    check_sources(sigmas)?;
    if t < 2 {
        return Err(VerifyError::HorizonTooShort(t));
    }
    let ln_t = (t as f64).ln();
    let violations = count(trials, seed, |rng| {
        let (mut w, mut n) = (0.0, 0.0);
        for step in 0..t {
            let sigma = sigmas[rule.pick(step, w, n, sigmas.len())];
            let p = 1.0 / (sigma * sigma);
            w += normal(rng) * sigma * p;
            n += p;
            if stopping.stops(n) {
                return stopping.deviates(w, n, ln_t);
            }
        }
        false
    });
    Ok(McOutcome {
        trials,
        violations,
        bound: stopping.bound(t),
    })
}

/// Non-adaptive schedule: `|μ̂ − μ| > ε` against `2 exp(−ñ ε²/2)`.
pub fn verify_fixed_schedule(
    schedule: &[f64],
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<McOutcome, VerifyError> {
    check_sources(schedule)?;
    let n: f64 = schedule.iter().map(|s| 1.0 / (s * s)).sum();
    let violations = count(trials, seed, |rng| {
        let w: f64 = schedule.iter().map(|&s| normal(rng) * s / (s * s)).sum();
        (w / n).abs() > eps
    });
    Ok(McOutcome {
        trials,
        violations,
        bound: fixed_schedule_bound(n, eps),
    })
}

/// Empirical variance of the weighted mean over a fixed schedule, together
/// with the predicted value `1/ñ`.
pub fn weighted_mean_variance(schedule: &[f64], trials: u64, seed: u64) -> (f64, f64) {
    let n: f64 = schedule.iter().map(|s| 1.0 / (s * s)).sum();
    let estimates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i);
            schedule
                .iter()
                .map(|&s| normal(&mut rng) * s / (s * s))
                .sum::<f64>()
                / n
        })
        .collect();
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (var, 1.0 / n)
}

/// One cell of the anytime grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnytimeCase {
    pub sigma_min: f64,
    pub alpha: f64,
    pub t: u64,
    pub rule: SourceRule,
}

impl AnytimeCase {
    /// Two sources: `σ_min` and `3 σ_min`.
    pub fn sources(&self) -> [f64; 2] {
        [self.sigma_min, 3.0 * self.sigma_min]
    }

    pub fn run(&self, trials: u64, seed: u64) -> Result<McOutcome, VerifyError> {
        verify_anytime_concentration(&self.sources(), self.rule, self.t, self.alpha, trials, seed)
    }
}

pub fn anytime_grid() -> Vec<AnytimeCase> {
    let mut out = Vec::new();
    for sigma_min in [0.5, 1.0, 2.0] {
        for alpha in [4.5, 6.0] {
            for t in [100, 1000] {
                for rule in [SourceRule::ChaseDeviation, SourceRule::AvoidDeviation] {
                    out.push(AnytimeCase {
                        sigma_min,
                        alpha,
                        t,
                        rule,
                    });
                }
            }
        }
    }
    out
}

/// One cell of the stopping-time grid. Sources are `σ ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingCase {
    pub stopping: StoppingRule,
    pub t: u64,
    pub rule: SourceRule,
}

pub const STOPPING_SOURCES: [f64; 2] = [1.0, 2.0];

impl StoppingCase {
    pub fn run(&self, trials: u64, seed: u64) -> Result<McOutcome, VerifyError> {
        verify_stopping_bound(
            self.stopping,
            &STOPPING_SOURCES,
            self.rule,
            self.t,
            trials,
            seed,
        )
    }
}

pub fn stopping_grid() -> Vec<StoppingCase> {
    let mut out = Vec::new();
    let rule = SourceRule::ChaseDeviation;
    for t in [100, 1000] {
        for (lower, upper) in [(1.0, 2.0), (2.0, 3.0), (4.0, 8.0)] {
            for alpha in [1.0, 4.0] {
                out.push(StoppingCase {
                    stopping: StoppingRule::Interval {
                        lower,
                        upper,
                        alpha,
                    },
                    t,
                    rule,
                });
            }
        }
        for r in [4.0, 8.0] {
            for eps in [0.5, 1.0] {
                out.push(StoppingCase {
                    stopping: StoppingRule::Threshold { r, eps },
                    t,
                    rule,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bound_examples() {
        let a = StoppingRule::Interval {
            lower: 1.0,
            upper: 2.0,
            alpha: 4.0,
        };
        assert_relative_eq!(a.bound(100), 2e-4, max_relative = 1e-12);
        let b = StoppingRule::Threshold { r: 8.0, eps: 1.0 };
        assert_relative_eq!(b.bound(100), 2.0 * (-4f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(0.0366, b.bound(100), epsilon = 1e-4);
    }

    #[test]
    fn interval_validation() {
        for (lower, upper) in [(2.0, 1.0), (0.0, 1.0), (1.0, 1.0)] {
            let rule = StoppingRule::Interval {
                lower,
                upper,
                alpha: 4.0,
            };
            assert_eq!(
                verify_stopping_bound(rule, &[1.0], SourceRule::Fixed(0), 10, 10, 0),
                Err(VerifyError::InvalidInterval { lower, upper })
            );
        }
    }

    #[test]
    fn zero_trials_not_run() {
        let out =
            verify_anytime_concentration(&[1.0], SourceRule::Fixed(0), 10, 4.5, 0, 0).unwrap();
        assert_eq!(out.empirical_rate(), None);
        assert_eq!(out.passed(), None);
    }

    #[test]
    fn large_noise_high_alpha() {
        let out =
            verify_anytime_concentration(&[5.0, 15.0], SourceRule::Alternating, 100, 8.0, 2000, 1)
                .unwrap();
        // 2 · 100^(1 − 4) = 2 · 100⁻³
        assert_relative_eq!(out.bound, 2e-6, max_relative = 1e-12);
        assert_eq!(out.passed(), Some(true));
    }

    #[test]
    fn reproducible() {
        let run = || {
            verify_stopping_bound(
                StoppingRule::Threshold { r: 2.0, eps: 0.5 },
                &STOPPING_SOURCES,
                SourceRule::ChaseDeviation,
                50,
                500,
                9,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn band_width() {
        let o = McOutcome {
            trials: 100,
            violations: 0,
            bound: 0.25,
        };
        assert_relative_eq!(
            o.band(),
            0.25 + 3.0 * (0.1875f64 / 100.0).sqrt(),
            epsilon = 1e-15
        );
    }
}
