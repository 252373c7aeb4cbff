//! The target-model contract.
//!
//! A model bundles a prior `π(x)`, a nonnegative likelihood `L(x)` and a
//! Markov kernel that leaves `π(x | L(x) > m)` invariant for any threshold
//! `m`. Every estimator in this crate touches the model only through
//! [`TargetModel`].

use core::fmt::Debug;

use rand::Rng;

use crate::Result;

/// A point together with its cached likelihood.
///
/// `likelihood` is always `exp(log_likelihood)` as produced by the model's
/// own evaluation, except for models whose likelihood is naturally computed
/// on the linear scale (then `log_likelihood` is its logarithm). Threshold
/// comparisons use `likelihood`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample<P> {
    pub point: P,
    pub likelihood: f64,
    pub log_likelihood: f64,
}

impl<P> Sample<P> {
    #[inline]
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.likelihood > threshold
    }
}

pub trait TargetModel: Sync {
    type Point: Clone + Debug + Send + Sync;

    /// Dimension `k` of the state space.
    fn dim(&self) -> usize;

    /// `sup_x L(x)` when it is known analytically.
    fn max_likelihood(&self) -> Option<f64>;

    fn log_likelihood(&self, point: &Self::Point) -> f64;

    fn likelihood(&self, point: &Self::Point) -> f64;

    /// Wraps `point` with its likelihood evaluated through the model.
    fn evaluate(&self, point: Self::Point) -> Sample<Self::Point> {
        let likelihood = self.likelihood(&point);
        let log_likelihood = self.log_likelihood(&point);
        Sample {
            point,
            likelihood,
            log_likelihood,
        }
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample<Self::Point>;

    /// One application of a kernel leaving `π(x | L(x) > threshold)`
    /// invariant. Returns whether the state moved.
    ///
    /// Fails with [`crate::Error::Contract`] when the entry state does not
    /// satisfy `L(x) > threshold`.
    fn constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<Self::Point>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool>;
}
