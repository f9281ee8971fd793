//! Shared fixtures and independent reference computations for the
//! integration tests.
#![allow(dead_code)]

use rand::Rng;
use sidebandit::environment::{FeedbackMatrix, Instance, RandomFeedback};

pub mod oracle;

pub const INF: f64 = f64::INFINITY;

pub fn standard3() -> Instance<f64> {
    Instance::new(
        vec![1.0, 0.5, 0.0],
        FeedbackMatrix::standard(3, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn full3() -> Instance<f64> {
    Instance::new(vec![1.0, 0.5, 0.0], FeedbackMatrix::full(3, 1.0).unwrap()).unwrap()
}

/// The best arm observes every arm at σ = 0.5; the others see only themselves.
pub fn revealing4() -> Instance<f64> {
    let sigma = vec![
        vec![0.5, 0.5, 0.5, 0.5],
        vec![INF, 1.0, INF, INF],
        vec![INF, INF, 1.0, INF],
        vec![INF, INF, INF, 1.0],
    ];
    Instance::new(
        vec![1.0, 0.8, 0.8, 0.5],
        FeedbackMatrix::new(sigma).unwrap(),
    )
    .unwrap()
}

/// Same shape, but the revealing arm is the worst one.
pub fn revealing4_suboptimal() -> Instance<f64> {
    let sigma = vec![
        vec![1.0, INF, INF, INF],
        vec![INF, 1.0, INF, INF],
        vec![INF, INF, 1.0, INF],
        vec![0.5, 0.5, 0.5, 0.5],
    ];
    Instance::new(
        vec![1.0, 0.8, 0.8, 0.5],
        FeedbackMatrix::new(sigma).unwrap(),
    )
    .unwrap()
}

/// Random instance with means at least `min_gap` apart.
pub fn random_instance<R: Rng>(k: usize, min_gap: f64, rng: &mut R) -> Instance<f64> {
    let feedback = FeedbackMatrix::random(k, &RandomFeedback::default(), rng).unwrap();
    loop {
        let means: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let mut sorted = means.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return Instance::new(means, feedback).unwrap();
        }
    }
}
