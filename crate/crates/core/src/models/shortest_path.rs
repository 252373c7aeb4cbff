//! Shortest path through a four-vertex network with exponential edge weights.
//!
//! Vertices `a, b, c, d`; edges `a-b` (x1), `a-c` (x2), `b-c` (x3), `b-d`
//! (x4) and `c-d` (x5). The likelihood is the length of the shortest `a → d`
//! path, the minimum over the four simple paths.

use num_traits::Float;
use rand::Rng;
use rand_distr::Exp1;

use crate::model::{Sample, TargetModel};
use crate::{Error, Result};

pub type EdgeWeights = [f64; 5];

/// Scale parameters of the benchmark network.
pub const BENCHMARK_SCALES: EdgeWeights = [0.25, 0.4, 0.1, 0.3, 0.2];

/// Reference rare-event probabilities `P(S(x) > γ)` for `γ = 2, 3, 4` under
/// [`BENCHMARK_SCALES`].
pub const REFERENCE_TAIL: [(f64, f64); 3] = [(2.0, 1.34e-5), (3.0, 2.06e-8), (4.0, 3.10e-11)];

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathModel {
    scales: EdgeWeights,
}

impl Default for ShortestPathModel {
    fn default() -> Self {
        Self {
            scales: BENCHMARK_SCALES,
        }
    }
}

/// Length of the shortest `a → d` path,
/// `min(x1 + x4, x1 + x3 + x5, x2 + x3 + x4, x2 + x5)`.
pub fn shortest_path_length(x: &EdgeWeights) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Domain("edge weights must be positive and finite"));
    }
    Ok(path_min(x))
}

#[inline]
fn path_min(x: &EdgeWeights) -> f64 {
    (x[0] + x[3])
        .min(x[0] + x[2] + x[4])
        .min(x[1] + x[2] + x[3])
        .min(x[1] + x[4])
}

impl ShortestPathModel {
    pub fn new(scales: EdgeWeights) -> Result<Self> {
        if scales.iter().any(|u| !u.is_finite() || *u <= 0.0) {
            return Err(Error::Domain("edge scales must be positive and finite"));
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &EdgeWeights {
        &self.scales
    }

    /// Lower bound that edge `j` must exceed for every path through it to be
    /// longer than `threshold`, given the other edges.
    ///
    /// By memorylessness `x_j | x_(-j), S(x) > m` is this shift plus a fresh
    /// `Exp(u_j)` draw.
    #[inline]
    pub fn coordinate_shift(x: &EdgeWeights, j: usize, threshold: f64) -> f64 {
        let m = threshold;
        let s = match j {
            0 => (m - x[3]).max(m - x[2] - x[4]),
            1 => (m - x[2] - x[3]).max(m - x[4]),
            2 => (m - x[0] - x[4]).max(m - x[1] - x[3]),
            3 => (m - x[0]).max(m - x[1] - x[2]),
            4 => (m - x[0] - x[2]).max(m - x[1]),
            _ => panic!("edge index {j} out of range"),
        };
        s.max(0.0)
    }

    /// One systematic Gibbs sweep over edges 1..5 targeting
    /// `π(x | S(x) > threshold)`.
    pub fn gibbs_conditional_sweep<R: Rng + ?Sized>(
        &self,
        x: &EdgeWeights,
        threshold: f64,
        rng: &mut R,
    ) -> Result<EdgeWeights> {
        if path_min(x) <= threshold {
            return Err(Error::Contract("entry state does not exceed the threshold"));
        }
        let mut y = *x;
        for j in 0..5 {
            let shift = Self::coordinate_shift(&y, j, threshold);
            loop {
                let e: f64 = rng.sample(Exp1);
                y[j] = shift + self.scales[j] * e;
                // A vanishing draw can round the path sum onto the threshold.
                if y[j] > 0.0 && (shift == 0.0 || path_min(&y) > threshold) {
                    break;
                }
            }
        }
        Ok(y)
    }

    /// Likelihood ratio `π(x | u) / π(x | v)` of independent exponentials
    /// with scales `u` (this model) against `v`.
    pub fn likelihood_ratio(&self, x: &EdgeWeights, v: &EdgeWeights) -> f64 {
        let mut log_w = 0.0;
        for j in 0..5 {
            let u = self.scales[j];
            log_w += (v[j] / u).ln() - x[j] * (1.0 / u - 1.0 / v[j]);
        }
        log_w.exp()
    }

    /// Independent exponential draws with the given scales, edge by edge.
    #[inline]
    pub fn draw_exponentials<R: Rng + ?Sized>(scales: &EdgeWeights, rng: &mut R) -> EdgeWeights {
        let mut x = [0.0; 5];
        for (xj, u) in x.iter_mut().zip(scales) {
            let e: f64 = rng.sample(Exp1);
            *xj = u * e;
        }
        x
    }
}

impl TargetModel for ShortestPathModel {
    type Point = EdgeWeights;

    fn dim(&self) -> usize {
        5
    }

    fn max_likelihood(&self) -> Option<f64> {
        None
    }

    fn log_likelihood(&self, point: &EdgeWeights) -> f64 {
        path_min(point).ln()
    }

    fn likelihood(&self, point: &EdgeWeights) -> f64 {
        path_min(point)
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample<EdgeWeights> {
        self.evaluate(Self::draw_exponentials(&self.scales, rng))
    }

    fn constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<EdgeWeights>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool> {
        let next = self.gibbs_conditional_sweep(&sample.point, threshold, rng)?;
        *sample = self.evaluate(next);
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_evaluated_paths() {
        assert_eq!(shortest_path_length(&[1.0; 5]).unwrap(), 2.0);
        assert_eq!(
            shortest_path_length(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap(),
            0.5
        );
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(shortest_path_length(&[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(shortest_path_length(&[1.0, f64::NAN, 1.0, 1.0, 1.0]).is_err());
        assert!(ShortestPathModel::new([1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn first_coordinate_shift() {
        let x = [9.0, 9.0, 0.1, 0.3, 0.1];
        let s = ShortestPathModel::coordinate_shift(&x, 0, 0.5);
        assert!((s - 0.3).abs() < 1e-15);
    }

    #[test]
    fn shifts_vanish_at_zero_threshold() {
        let x = [0.3, 0.2, 0.1, 0.4, 0.5];
        for j in 0..5 {
            assert_eq!(ShortestPathModel::coordinate_shift(&x, j, 0.0), 0.0);
        }
    }

    #[test]
    fn sweep_preserves_constraint() {
        let model = ShortestPathModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = [1.0; 5];
        for _ in 0..10_000 {
            x = model.gibbs_conditional_sweep(&x, 1.5, &mut rng).unwrap();
            assert!(path_min(&x) > 1.5);
        }
        assert!(matches!(
            model.gibbs_conditional_sweep(&[0.1; 5], 1.5, &mut rng),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn identity_blanket_has_unit_weight() {
        let model = ShortestPathModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = ShortestPathModel::draw_exponentials(&BENCHMARK_SCALES, &mut rng);
            assert_eq!(model.likelihood_ratio(&x, &BENCHMARK_SCALES), 1.0);
        }
    }
}
