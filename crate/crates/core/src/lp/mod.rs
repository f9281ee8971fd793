//! The exploration linear program.
//!
//! For a mean vector `μ` and feedback matrix `Σ`, every arm `i` must gather
//! weighted information `Σ_j c_j/σ²_{j,i}` of at least `2/Δ_i²` (or
//! `2/Δ_min²` for the best arm). The cheapest such `c` under the gap-weighted
//! cost `Σ c_i Δ_i` gives both the regret lower-bound constant and the
//! exploration targets of the adaptive policy.

mod simplex;

use num_rational::BigRational;
use rand::Rng;
use thiserror::Error;

use crate::environment::{gaps, FeedbackMatrix, Instance};
use crate::scalar::{Real, Scalar};

pub const DEFAULT_GAP_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("constraint of arm {row} cannot be satisfied (no arm observes it)")]
    Infeasible { row: usize },
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `coeff[i][j] = 1/σ²_{j,i}`: row `i` is the information requirement of arm
/// `i`, column `j` is the play count `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet<S> {
    pub coeff: Vec<Vec<S>>,
    pub rhs: Vec<S>,
}

/// Optimal exploration vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub c: Vec<S>,
    /// `Σ_i c_i Δ_i`.
    pub objective: S,
    pub pivots: usize,
}

impl<S: Scalar> ConstraintSet<S> {
    pub fn k(&self) -> usize {
        self.rhs.len()
    }

    /// Row activities `coeff · x`.
    pub fn activity(&self, x: &[S]) -> Vec<S> {
        self.coeff.iter().map(|row| simplex::dot(row, x)).collect()
    }

    /// Whether `x` satisfies every row, compared exactly.
    pub fn contains(&self, x: &[S]) -> bool {
        membership(x, self)
    }
}

impl<T: Real> ConstraintSet<T> {
    /// The same constraint set in exact rational arithmetic. Every finite
    /// float is a dyadic rational, so the conversion is lossless.
    pub fn to_exact(&self) -> ConstraintSet<BigRational> {
        ConstraintSet {
            coeff: self
                .coeff
                .iter()
                .map(|row| row.iter().map(|v| to_rational(*v)).collect())
                .collect(),
            rhs: self.rhs.iter().map(|v| to_rational(*v)).collect(),
        }
    }
}

pub fn to_rational<T: Real>(v: T) -> BigRational {
    BigRational::from_f64_finite(v.to_f64().expect("finite"))
}

/// Builds `C(μ)`. Gaps are regularized so every right-hand side is finite:
/// positive gaps are floored at `gap_floor`; arms tied with the chosen best
/// arm share its requirement `2/Δ_min²`; if all means tie, every arm uses
/// `2/gap_floor²`.
pub fn build_constraints<T: Real>(
    means: &[T],
    feedback: &FeedbackMatrix<T>,
    gap_floor: T,
) -> ConstraintSet<T> {
    let k = feedback.k();
    assert_eq!(means.len(), k, "means/feedback dimension mismatch");
    let g = gaps(means);
    let two = T::of(2.0);
    let min_gap = g.delta_min.map_or(gap_floor, |d| d.max(gap_floor));
    let rhs = g
        .deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let gap = if i == g.i_star || !(d > T::zero()) {
                min_gap
            } else {
                d.max(gap_floor)
            };
            two / (gap * gap)
        })
        .collect();
    let coeff = (0..k)
        .map(|i| (0..k).map(|j| feedback.precision(j, i)).collect())
        .collect();
    ConstraintSet { coeff, rhs }
}

/// Minimizes `Σ c_i deltas[i]` over `C`. Ties between optimal vertices are
/// resolved by the fixed pivot order.
pub fn solve<S: Scalar>(cs: &ConstraintSet<S>, deltas: &[S]) -> Result<LpSolution<S>, LpError> {
    let k = cs.k();
    if deltas.len() != k || cs.coeff.len() != k || cs.coeff.iter().any(|r| r.len() != k) {
        return Err(LpError::Dimension(format!(
            "{} rows, {} deltas",
            cs.coeff.len(),
            deltas.len()
        )));
    }
    let mut out = simplex::minimize(&cs.coeff, &cs.rhs, deltas)?;
    simplex::restore_feasibility(&cs.coeff, &cs.rhs, &mut out.x);
    let objective = simplex::dot(deltas, &out.x);
    Ok(LpSolution {
        c: out.x,
        objective,
        pivots: out.pivots,
    })
}

/// Builds and solves the program at `means`.
pub fn solve_at<T: Real>(
    means: &[T],
    feedback: &FeedbackMatrix<T>,
    gap_floor: T,
) -> Result<LpSolution<T>, LpError> {
    let cs = build_constraints(means, feedback, gap_floor);
    solve(&cs, &gaps(means).deltas)
}

/// The asymptotic regret constant `Σ_i c*_i(μ) Δ_i(μ)`.
pub fn lower_bound_value<T: Real>(instance: &Instance<T>, gap_floor: T) -> Result<T, LpError> {
    Ok(solve_at(instance.means(), instance.feedback(), gap_floor)?.objective)
}

/// `coeff · scaled_counts ≥ rhs` row by row, with no tolerance.
pub fn membership<S: Scalar>(scaled_counts: &[S], cs: &ConstraintSet<S>) -> bool {
    cs.coeff
        .iter()
        .zip(&cs.rhs)
        .all(|(row, b)| simplex::dot(row, scaled_counts) >= *b)
}

/// Rows whose slack is within `rel_tol · max(1, rhs)` of zero.
pub fn active_constraints<S: Scalar>(cs: &ConstraintSet<S>, c: &[S], rel_tol: S) -> Vec<usize> {
    cs.activity(c)
        .into_iter()
        .zip(&cs.rhs)
        .enumerate()
        .filter(|(_, (lhs, b))| {
            let scale = if b.abs() > S::one() {
                b.abs()
            } else {
                S::one()
            };
            (lhs.clone() - (*b).clone()).abs() <= rel_tol.clone() * scale
        })
        .map(|(i, _)| i)
        .collect()
}

/// Lower estimate of the worst-case `ε`-approximate solution
/// `sup_{‖μ'−μ‖∞ ≤ ε} c*_j(μ')`, taken component-wise over a candidate set.
///
/// Candidates: `μ`; the `2K` single-coordinate moves `μ ± ε e_i`; for each arm
/// the two corners that raise (lower) it and lower (raise) every other arm;
/// every corner of the box when `K ≤ 8`; then `trials` uniform draws from the
/// box. More trials on the same stream only add candidates.
pub fn epsilon_worst_case<T: Real, R: Rng + ?Sized>(
    instance: &Instance<T>,
    eps: T,
    trials: usize,
    gap_floor: T,
    rng: &mut R,
) -> Result<Vec<T>, LpError> {
    let k = instance.k();
    let mu = instance.means();
    let feedback = instance.feedback();
    let mut worst = solve_at(mu, feedback, gap_floor)?.c;
    let mut absorb = |candidate: &[T]| -> Result<(), LpError> {
        let c = solve_at(candidate, feedback, gap_floor)?.c;
        for (w, v) in worst.iter_mut().zip(c) {
            if v > *w {
                *w = v;
            }
        }
        Ok(())
    };

    for i in 0..k {
        for sign in [T::one(), -T::one()] {
            let mut m = mu.to_vec();
            m[i] = m[i] + sign * eps;
            absorb(&m)?;
            let spread: Vec<T> = (0..k)
                .map(|j| {
                    if j == i {
                        mu[j] + sign * eps
                    } else {
                        mu[j] - sign * eps
                    }
                })
                .collect();
            absorb(&spread)?;
        }
    }
    if k <= 8 {
        for mask in 0u32..(1 << k) {
            let corner: Vec<T> = (0..k)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        mu[j] + eps
                    } else {
                        mu[j] - eps
                    }
                })
                .collect();
            absorb(&corner)?;
        }
    }
    for _ in 0..trials {
        let sample: Vec<T> = mu
            .iter()
            .map(|&m| m + eps * (T::of(2.0) * T::unit(rng) - T::one()))
            .collect();
        absorb(&sample)?;
    }
    Ok(worst)
}
