//! Gaussian spike-and-slab likelihood under a uniform prior on a box.
//!
//! `L(x) = w ∏ N(x_i; c_i, u²) + ∏ N(x_i; 0, v²)` with the prior uniform on
//! `[-h, h]^C`. The prior box has unit volume at the default half-width, so
//! the evidence is `w + 1` up to a negligible truncation term.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;

use crate::model::{Sample, TargetModel};
use crate::stats::log_add_exp;
use crate::{Error, Result};

/// `ln 101`, the log-evidence of both benchmark mixtures.
pub const LOG_EVIDENCE: f64 = 4.61512051684126;

const LOG10_MIN_STEP: f64 = -4.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureModel {
    spike_width: f64,
    slab_width: f64,
    center: Vec<f64>,
    spike_weight: f64,
    half_width: f64,
    spike_norm: f64,
    slab_norm: f64,
}

impl GaussianMixtureModel {
    /// Builds a mixture with a spike at `center` (one entry per coordinate).
    pub fn new(
        spike_width: f64,
        slab_width: f64,
        center: Vec<f64>,
        spike_weight: f64,
        half_width: f64,
    ) -> Result<Self> {
        if !(spike_width > 0.0 && spike_width < slab_width && slab_width.is_finite()) {
            return Err(Error::Domain("widths must satisfy 0 < u < v"));
        }
        if center.is_empty() {
            return Err(Error::Domain("dimension must be positive"));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain("prior box half-width must be positive"));
        }
        if center.iter().any(|c| !(c.abs() < half_width)) {
            return Err(Error::Domain("spike center must lie inside the prior box"));
        }
        if !(spike_weight > 0.0 && spike_weight.is_finite()) {
            return Err(Error::Domain("spike weight must be positive"));
        }
        let dim = center.len() as f64;
        let norm = |s: f64| -0.5 * dim * (2.0 * PI * s * s).ln();
        Ok(Self {
            spike_norm: spike_weight.ln() + norm(spike_width),
            slab_norm: norm(slab_width),
            spike_width,
            slab_width,
            center,
            spike_weight,
            half_width,
        })
    }

    /// The 20-dimensional mixture with the spike at the origin.
    pub fn centered() -> Self {
        Self::new(0.01, 0.1, vec![0.0; 20], 100.0, 0.5).expect("valid benchmark parameters")
    }

    /// The 20-dimensional mixture with the spike moved to `0.031` in every
    /// coordinate.
    pub fn decentered() -> Self {
        Self::new(0.01, 0.1, vec![0.031; 20], 100.0, 0.5).expect("valid benchmark parameters")
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spike_weight(&self) -> f64 {
        self.spike_weight
    }

    pub fn widths(&self) -> (f64, f64) {
        (self.spike_width, self.slab_width)
    }

    /// `ln ∫ L(x) π(x) dx` ignoring the mass outside the box.
    pub fn log_evidence(&self) -> f64 {
        let volume = (2.0 * self.half_width).powi(self.center.len() as i32);
        (self.spike_weight + 1.0).ln() - volume.ln()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.half_width)
    }

    /// Log of the spike and slab components.
    pub fn log_components(&self, x: &[f64]) -> (f64, f64) {
        let mut spike = 0.0;
        let mut slab = 0.0;
        for (xi, ci) in x.iter().zip(&self.center) {
            let d = xi - ci;
            spike += d * d;
            slab += xi * xi;
        }
        let a = self.spike_norm - spike / (2.0 * self.spike_width * self.spike_width);
        let b = self.slab_norm - slab / (2.0 * self.slab_width * self.slab_width);
        (a, b)
    }

    /// Log of the sum of both component peaks. This is `sup L` when the
    /// spike sits at the origin and a tight upper bound otherwise.
    pub fn log_max_likelihood(&self) -> f64 {
        log_add_exp(self.spike_norm, self.slab_norm)
    }

    /// Random-walk Metropolis move on one coordinate with a log-uniform step
    /// size, constrained to the box and to `L(x) > threshold`.
    pub fn rw_mh_constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<Vec<f64>>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if !sample.exceeds(threshold) || !self.in_box(&sample.point) {
            return Err(Error::Contract("entry state violates the constraint"));
        }
        let j = rng.random_range(0..sample.point.len());
        let u: f64 = rng.random();
        let sigma = 10f64.powf(LOG10_MIN_STEP * (1.0 - u));
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let old = sample.point[j];
        let proposal = old + sigma * z;
        if proposal.abs() > self.half_width {
            return Ok(false);
        }
        sample.point[j] = proposal;
        let log_l = self.log_likelihood(&sample.point);
        let l = log_l.exp();
        if l > threshold {
            sample.likelihood = l;
            sample.log_likelihood = log_l;
            Ok(true)
        } else {
            sample.point[j] = old;
            Ok(false)
        }
    }
}

/// `100 ∏ N(x_i; c_i, u²) + ∏ N(x_i; 0, v²)` evaluated on the linear scale
/// through its logarithm.
pub fn mixture_likelihood(x: &[f64], model: &GaussianMixtureModel) -> f64 {
    let (a, b) = model.log_components(x);
    log_add_exp(a, b).exp()
}

impl TargetModel for GaussianMixtureModel {
    type Point = Vec<f64>;

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn max_likelihood(&self) -> Option<f64> {
        Some(self.log_max_likelihood().exp())
    }

    fn log_likelihood(&self, point: &Vec<f64>) -> f64 {
        let (a, b) = self.log_components(point);
        log_add_exp(a, b)
    }

    fn likelihood(&self, point: &Vec<f64>) -> f64 {
        self.log_likelihood(point).exp()
    }

    fn evaluate(&self, point: Vec<f64>) -> Sample<Vec<f64>> {
        let log_likelihood = self.log_likelihood(&point);
        Sample {
            point,
            likelihood: log_likelihood.exp(),
            log_likelihood,
        }
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample<Vec<f64>> {
        let h = self.half_width;
        let point = (0..self.center.len())
            .map(|_| rng.random_range(-h..h))
            .collect();
        self.evaluate(point)
    }

    fn constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<Vec<f64>>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool> {
        self.rw_mh_constrained_step(sample, threshold, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_value() {
        let m = GaussianMixtureModel::centered();
        let expected = log_add_exp(
            100f64.ln() - 10.0 * (2.0 * PI * 1e-4).ln(),
            -10.0 * (2.0 * PI * 1e-2).ln(),
        );
        let got = m.log_likelihood(&vec![0.0; 20]);
        assert!((got - expected).abs() < 1e-12);
        assert!((m.log_max_likelihood() - got).abs() < 1e-15);
    }

    #[test]
    fn far_corner_is_positive() {
        let m = GaussianMixtureModel::centered();
        let l = m.likelihood(&vec![0.5; 20]);
        assert!(l > 0.0 && l.is_finite());
    }

    #[test]
    fn exp_of_log_matches_direct() {
        let m = GaussianMixtureModel::decentered();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-0.2..0.2)).collect();
            let (a, b) = m.log_components(&x);
            let direct = a.exp() + b.exp();
            let l = m.likelihood(&x);
            assert!(((l - direct) / direct).abs() < 1e-12);
        }
    }

    #[test]
    fn evidence_constant() {
        assert!((LOG_EVIDENCE - 101f64.ln()).abs() < 1e-14);
        assert!((GaussianMixtureModel::centered().log_evidence() - LOG_EVIDENCE).abs() < 1e-14);
    }

    #[test]
    fn box_proposals_rejected() {
        let m = GaussianMixtureModel::centered();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = m.evaluate(vec![0.4999; 20]);
        for _ in 0..10_000 {
            m.rw_mh_constrained_step(&mut s, 0.0, &mut rng).unwrap();
            assert!(m.in_box(&s.point));
            assert_eq!(s.likelihood, m.likelihood(&s.point));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMixtureModel::new(0.1, 0.01, vec![0.0], 1.0, 0.5).is_err());
        assert!(GaussianMixtureModel::new(0.01, 0.1, vec![0.6], 1.0, 0.5).is_err());
        assert!(GaussianMixtureModel::new(0.01, 0.1, vec![], 1.0, 0.5).is_err());
    }
}
