//! Bandit instances with a side-information matrix.
//!
//! Pulling arm `i` reveals, for every arm `j`, a Gaussian sample of `μ_j` with
//! standard deviation `σ_{i,j}`. An infinite entry means no observation.

use rand::Rng;
use thiserror::Error;

use crate::scalar::{argmax_first, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("feedback matrix must be square with side k >= 2 (got {rows} rows, row {bad_row} has {cols} entries)")]
    NonSquare {
        rows: usize,
        bad_row: usize,
        cols: usize,
    },
    #[error("feedback matrix needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("sigma[{row}][{col}] = {value} is not in (0, inf]")]
    NonPositiveSigma { row: usize, col: usize, value: f64 },
    #[error("arm {0} is unidentifiable: no arm observes it with finite noise")]
    UnidentifiableArm(usize),
    #[error("means has {means} entries but the feedback matrix has {arms} arms")]
    DimensionMismatch { means: usize, arms: usize },
    #[error("mean of arm {0} is not finite")]
    NonFiniteMean(usize),
    #[error("arm {0} is not suboptimal")]
    ArmNotSuboptimal(usize),
    #[error("arm index {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("perturbation must be positive and finite")]
    InvalidPerturbation,
    #[error("instances differ in more than one arm")]
    DifferInMoreThanOneArm,
    #[error("instances do not share the same feedback matrix")]
    FeedbackMismatch,
    #[error("graph adjacency lacks the self loop of arm {0}")]
    GraphMissingSelfLoop(usize),
    #[error("expected_counts has {got} entries, expected {expected}")]
    CountsLength { got: usize, expected: usize },
}

/// `K × K` noise standard deviations; row = pulled arm, column = observed arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMatrix<T> {
    sigma: Vec<Vec<T>>,
}

impl<T: Real> FeedbackMatrix<T> {
    /// Builds and validates a matrix. Entries must lie in `(0, ∞]`, and every
    /// column needs a finite entry.
    pub fn new(sigma: Vec<Vec<T>>) -> Result<Self, EnvError> {
        let m = FeedbackMatrix { sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let k = self.sigma.len();
        if k < 2 {
            return Err(EnvError::TooFewArms(k));
        }
        for (r, row) in self.sigma.iter().enumerate() {
            if row.len() != k {
                return Err(EnvError::NonSquare {
                    rows: k,
                    bad_row: r,
                    cols: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                // NaN fails `v > 0` as well.
                if !(v > T::zero()) {
                    return Err(EnvError::NonPositiveSigma {
                        row: r,
                        col: c,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        for col in 0..k {
            if !self.sigma.iter().any(|row| row[col].is_finite()) {
                return Err(EnvError::UnidentifiableArm(col));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, pulled: usize, observed: usize) -> T {
        self.sigma[pulled][observed]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.sigma
    }

    /// `1/σ²`, with `1/∞² = 0` exactly.
    pub fn precision(&self, pulled: usize, observed: usize) -> T {
        precision(self.sigma[pulled][observed])
    }

    /// `σ_i^min = min_j σ_{j,i}`.
    pub fn sigma_min(&self, arm: usize) -> T {
        self.sigma
            .iter()
            .map(|row| row[arm])
            .fold(T::infinity(), T::min)
    }

    /// `σ̄ = max_i σ_i^min`; finite for every validated matrix.
    pub fn sigma_bar(&self) -> T {
        (0..self.k())
            .map(|i| self.sigma_min(i))
            .fold(T::zero(), T::max)
    }

    /// Arm giving the least noisy view of `observed`, ties to the smallest index.
    pub fn best_source(&self, observed: usize) -> usize {
        let column: Vec<T> = self.sigma.iter().map(|row| row[observed]).collect();
        crate::scalar::argmin_first(&column).expect("k >= 2")
    }

    /// Number of finite entries in row `pulled`.
    pub fn observations_per_pull(&self, pulled: usize) -> usize {
        self.sigma[pulled].iter().filter(|s| s.is_finite()).count()
    }

    /// Multiplies every finite entry by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        FeedbackMatrix {
            sigma: self
                .sigma
                .iter()
                .map(|row| row.iter().map(|&s| s * factor).collect())
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> FeedbackMatrix<U> {
        FeedbackMatrix {
            sigma: self
                .sigma
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&s| U::from_f64(s.to_f64().unwrap()).unwrap())
                        .collect()
                })
                .collect(),
        }
    }

    /// Standard bandit feedback: `σ` on the diagonal, no side observations.
    pub fn standard(k: usize, sigma: T) -> Result<Self, EnvError> {
        Self::new(
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| if i == j { sigma } else { T::infinity() })
                        .collect()
                })
                .collect(),
        )
    }

    /// Full feedback: every pull observes every arm with noise `σ`.
    pub fn full(k: usize, sigma: T) -> Result<Self, EnvError> {
        Self::new(vec![vec![sigma; k]; k])
    }

    /// Graph feedback: `σ` where `adjacency[i][j]` holds, `∞` otherwise.
    /// Every arm must observe itself.
    pub fn graph(adjacency: &[Vec<bool>], sigma: T) -> Result<Self, EnvError> {
        let k = adjacency.len();
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != k {
                return Err(EnvError::NonSquare {
                    rows: k,
                    bad_row: i,
                    cols: row.len(),
                });
            }
            if !row[i] {
                return Err(EnvError::GraphMissingSelfLoop(i));
            }
        }
        Self::new(
            adjacency
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&edge| if edge { sigma } else { T::infinity() })
                        .collect()
                })
                .collect(),
        )
    }

    /// Random matrix: each entry is `∞` with probability `cfg.p_infinite`,
    /// otherwise uniform in `[cfg.low, cfg.high)`. All-infinite columns are
    /// patched by giving the diagonal entry a finite draw.
    pub fn random<R: Rng + ?Sized>(
        k: usize,
        cfg: &RandomFeedback,
        rng: &mut R,
    ) -> Result<Self, EnvError> {
        let draw = |rng: &mut R| T::of(cfg.low + (cfg.high - cfg.low) * rng.random::<f64>());
        let mut sigma: Vec<Vec<T>> = (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        if rng.random::<f64>() < cfg.p_infinite {
                            T::infinity()
                        } else {
                            draw(rng)
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..k {
            if sigma.iter().all(|row| !row[col].is_finite()) {
                sigma[col][col] = draw(rng);
            }
        }
        Self::new(sigma)
    }
}

/// Parameters of [`FeedbackMatrix::random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFeedback {
    pub low: f64,
    pub high: f64,
    pub p_infinite: f64,
}

impl Default for RandomFeedback {
    fn default() -> Self {
        RandomFeedback {
            low: 0.5,
            high: 2.0,
            p_infinite: 0.5,
        }
    }
}

/// `1/σ²` with the convention `1/∞² = 0`.
pub fn precision<T: Real>(sigma: T) -> T {
    if sigma.is_infinite() {
        T::zero()
    } else {
        T::one() / (sigma * sigma)
    }
}

/// Gap summary of a mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaps<T> {
    /// Smallest-index maximizer.
    pub i_star: usize,
    pub deltas: Vec<T>,
    /// Smallest strictly positive gap; `None` when all means are equal.
    pub delta_min: Option<T>,
    pub delta_max: T,
}

pub fn gaps<T: Real>(means: &[T]) -> Gaps<T> {
    let i_star = argmax_first(means).expect("at least one arm");
    let best = means[i_star];
    let deltas: Vec<T> = means.iter().map(|&m| best - m).collect();
    let delta_min = deltas
        .iter()
        .copied()
        .filter(|&d| d > T::zero())
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))));
    let delta_max = deltas.iter().copied().fold(T::zero(), T::max);
    Gaps {
        i_star,
        deltas,
        delta_min,
        delta_max,
    }
}

/// Mean vector together with its feedback matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    means: Vec<T>,
    feedback: FeedbackMatrix<T>,
}

/// One round of feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub arm_pulled: usize,
    /// `values[j]` is present exactly when `σ_{arm_pulled, j} < ∞`.
    pub values: Vec<Option<T>>,
    pub pseudo_regret_increment: T,
}

impl<T: Real> Instance<T> {
    pub fn new(means: Vec<T>, feedback: FeedbackMatrix<T>) -> Result<Self, EnvError> {
        let inst = Instance { means, feedback };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        self.feedback.validate()?;
        if self.means.len() != self.feedback.k() {
            return Err(EnvError::DimensionMismatch {
                means: self.means.len(),
                arms: self.feedback.k(),
            });
        }
        if let Some(i) = self.means.iter().position(|m| !m.is_finite()) {
            return Err(EnvError::NonFiniteMean(i));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    pub fn feedback(&self) -> &FeedbackMatrix<T> {
        &self.feedback
    }

    pub fn gaps(&self) -> Gaps<T> {
        gaps(&self.means)
    }

    pub fn optimal_arm(&self) -> usize {
        argmax_first(&self.means).expect("k >= 2")
    }

    pub fn sigma_bar(&self) -> T {
        self.feedback.sigma_bar()
    }

    /// Draws the feedback of pulling `arm`.
    pub fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Observation<T> {
        let k = self.k();
        assert!(arm < k, "arm {arm} out of range for {k} arms");
        let best = self.means[self.optimal_arm()];
        let values = (0..k)
            .map(|j| {
                let s = self.feedback.sigma(arm, j);
                if s.is_finite() {
                    Some(self.means[j] + s * T::standard_normal(rng))
                } else {
                    None
                }
            })
            .collect();
        Observation {
            arm_pulled: arm,
            values,
            pseudo_regret_increment: best - self.means[arm],
        }
    }

    /// The alternative instance that makes suboptimal arm `k` the unique best
    /// by a margin `eps`: `μ'_k = μ* + eps`, all else unchanged.
    pub fn perturbed(&self, k: usize, eps: T) -> Result<Self, EnvError> {
        if k >= self.k() {
            return Err(EnvError::ArmOutOfRange {
                arm: k,
                k: self.k(),
            });
        }
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(EnvError::InvalidPerturbation);
        }
        let g = self.gaps();
        if !(g.deltas[k] > T::zero()) {
            return Err(EnvError::ArmNotSuboptimal(k));
        }
        let mut means = self.means.clone();
        means[k] = self.means[g.i_star] + eps;
        Ok(Instance {
            means,
            feedback: self.feedback.clone(),
        })
    }

    pub fn with_means(&self, means: Vec<T>) -> Result<Self, EnvError> {
        Instance::new(means, self.feedback.clone())
    }

    pub fn cast<U: Real>(&self) -> Instance<U> {
        Instance {
            means: self
                .means
                .iter()
                .map(|&m| U::from_f64(m.to_f64().unwrap()).unwrap())
                .collect(),
            feedback: self.feedback.cast(),
        }
    }
}

/// KL divergence between the interaction laws of two instances that share the
/// feedback matrix and differ in one arm `k`:
/// `Σ_i counts[i] · (μ_k − μ'_k)² / (2σ²_{i,k})`.
pub fn kl_divergence<T: Real>(
    nu: &Instance<T>,
    nu_prime: &Instance<T>,
    expected_counts: &[T],
) -> Result<T, EnvError> {
    if nu.feedback != nu_prime.feedback {
        return Err(EnvError::FeedbackMismatch);
    }
    let k = nu.k();
    if expected_counts.len() != k {
        return Err(EnvError::CountsLength {
            got: expected_counts.len(),
            expected: k,
        });
    }
    let differing: Vec<usize> = (0..k)
        .filter(|&i| nu.means[i] != nu_prime.means[i])
        .collect();
    let arm = match differing.as_slice() {
        [] => return Ok(T::zero()),
        [arm] => *arm,
        _ => return Err(EnvError::DifferInMoreThanOneArm),
    };
    let diff = nu.means[arm] - nu_prime.means[arm];
    let half_sq = diff * diff / T::of(2.0);
    Ok(expected_counts
        .iter()
        .enumerate()
        .map(|(i, &n)| n * half_sq * nu.feedback.precision(i, arm))
        .fold(T::zero(), |a, b| a + b))
}
