//! Inverse-variance weighted mean estimator and its tail bounds.

use thiserror::Error;

use crate::environment::precision;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no informative sample: weighted count is zero")]
pub struct NoInformation;

/// Sufficient statistics of one arm's weighted ML estimate.
///
/// `weighted_sum = Σ X_τ/σ_τ²`, `weighted_count = Σ 1/σ_τ²`; the estimate is
/// their ratio. Samples with infinite noise only bump `sample_count`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmEstimator<T> {
    pub weighted_sum: T,
    pub weighted_count: T,
    pub sample_count: u64,
}

impl<T: Real> ArmEstimator<T> {
    pub fn new() -> Self {
        ArmEstimator {
            weighted_sum: T::zero(),
            weighted_count: T::zero(),
            sample_count: 0,
        }
    }

    pub fn update(&mut self, x: T, sigma: T) {
        self.sample_count += 1;
        let w = precision(sigma);
        if w > T::zero() {
            self.weighted_sum = self.weighted_sum + x * w;
            self.weighted_count = self.weighted_count + w;
        }
    }

    pub fn with(mut self, x: T, sigma: T) -> Self {
        self.update(x, sigma);
        self
    }

    pub fn has_information(&self) -> bool {
        self.weighted_count > T::zero()
    }

    pub fn mean(&self) -> Result<T, NoInformation> {
        if self.has_information() {
            Ok(self.weighted_sum / self.weighted_count)
        } else {
            Err(NoInformation)
        }
    }

    /// `sqrt(2 α ln t / ñ)`.
    pub fn confidence_radius(&self, t: u64, alpha: T) -> Result<T, NoInformation> {
        if !self.has_information() {
            return Err(NoInformation);
        }
        Ok(radius(self.weighted_count, t, alpha))
    }
}

/// `sqrt(2 α ln t / ñ)` for a given weighted count.
pub fn radius<T: Real>(weighted_count: T, t: u64, alpha: T) -> T {
    radius_at_log(weighted_count, T::of(t as f64).ln(), alpha)
}

/// Same as [`radius`] with `ln t` supplied directly.
pub fn radius_at_log<T: Real>(weighted_count: T, ln_t: T, alpha: T) -> T {
    (T::of(2.0) * alpha * ln_t / weighted_count).sqrt()
}

/// Which form of the anytime deviation bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailBoundForm {
    /// `2 max(1, ⌈log₂(t−1)⌉) t^{−α/2}`.
    Peeled,
    /// `2 t^{1−α/2}`, the looser form used when summing over rounds.
    Loose,
}

/// Probability bound on `|μ̂(t) − μ| > sqrt(2α ln t / ñ(t))`, clamped to `[0, 1]`.
pub fn anytime_tail_bound(t: u64, alpha: f64, form: TailBoundForm) -> f64 {
    assert!(t >= 2, "anytime bound needs t >= 2");
    let tf = t as f64;
    let raw = match form {
        TailBoundForm::Peeled => {
            // At t = 2 the single sample still forms one bucket.
            let buckets = ((t - 1) as f64).log2().ceil().max(1.0);
            2.0 * buckets * tf.powf(-alpha / 2.0)
        }
        TailBoundForm::Loose => 2.0 * tf.powf(1.0 - alpha / 2.0),
    };
    raw.clamp(0.0, 1.0)
}

/// Deviation bound for a non-adaptive schedule: `2 exp(−ñ ε² / 2)`, clamped.
pub fn fixed_schedule_bound(weighted_count: f64, eps: f64) -> f64 {
    (2.0 * (-weighted_count * eps * eps / 2.0).exp()).clamp(0.0, 1.0)
}
