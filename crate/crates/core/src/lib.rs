//! Gaussian multi-armed bandits with side observations.
//!
//! Pulling an arm reveals noisy samples of possibly many arms, with
//! per-pair noise levels given by a feedback matrix. The crate provides the
//! environment, an inverse-variance weighted estimator, the exploration LP
//! (with an exact rational solver alongside the floating one), an adaptive
//! LP-tracking policy with UCB/ETC/uniform baselines, and a seeded,
//! parallel simulation harness.
//!
//! The numeric core is generic; the aliases below fix the usual choices.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod lp;
pub mod policy;
pub mod scalar;

use num_rational::BigRational;

pub use environment::{gaps, kl_divergence, EnvError, FeedbackMatrix, Gaps, Instance, Observation};
pub use estimator::{anytime_tail_bound, ArmEstimator, NoInformation, TailBoundForm};
pub use lp::{ConstraintSet, LpError, LpSolution};
pub use policy::{CaseLabel, Decision, PolicyError, PolicyKind, PolicyParams, PolicyState};
pub use scalar::{Real, Scalar};

pub type FeedbackMatrix64 = FeedbackMatrix<f64>;
pub type FeedbackMatrix32 = FeedbackMatrix<f32>;
pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type ArmEstimator64 = ArmEstimator<f64>;
pub type ConstraintSet64 = ConstraintSet<f64>;
pub type ConstraintSetQ = ConstraintSet<BigRational>;
pub type LpSolution64 = LpSolution<f64>;
pub type LpSolutionQ = LpSolution<BigRational>;
pub type PolicyParams64 = PolicyParams<f64>;
pub type PolicyState64 = PolicyState<f64>;
