//! One-dimensional models with closed-form level masses and exact
//! constrained samplers, used to check the estimators against analytic
//! answers.

use num_traits::Float;
use rand::Rng;

use crate::model::{Sample, TargetModel};
use crate::{Error, Result};

/// `x ~ U(0, 1)` and `L(x) = x`, so `Z(m) = 1 - m` on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UniformToy;

impl UniformToy {
    pub fn tail(m: f64) -> f64 {
        (1.0 - m).clamp(0.0, 1.0)
    }

    /// Thresholds with `Z(m_t) = rho^t`.
    pub fn exact_level(rho: f64, t: usize) -> f64 {
        1.0 - rho.powi(t as i32)
    }
}

impl TargetModel for UniformToy {
    type Point = f64;

    fn dim(&self) -> usize {
        1
    }

    fn max_likelihood(&self) -> Option<f64> {
        Some(1.0)
    }

    fn log_likelihood(&self, x: &f64) -> f64 {
        x.ln()
    }

    fn likelihood(&self, x: &f64) -> f64 {
        *x
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample<f64> {
        // Open interval keeps L strictly positive.
        let x: f64 = rng.sample(rand::distr::OpenClosed01);
        self.evaluate(x)
    }

    /// Independent exact draw from `U(threshold, 1)`.
    fn constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<f64>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if !sample.exceeds(threshold) {
            return Err(Error::Contract("entry state does not exceed the threshold"));
        }
        let lo = threshold.max(0.0);
        loop {
            let u: f64 = rng.sample(rand::distr::OpenClosed01);
            let x = 1.0 - (1.0 - lo) * (1.0 - u);
            if x > lo {
                *sample = self.evaluate(x);
                return Ok(true);
            }
        }
    }
}

/// `x ~ U(0, 1)` and `L(x) = e^{-x}`, so `Z = 1 - e^{-1}` and `L_max = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpToy;

impl ExpToy {
    pub fn evidence() -> f64 {
        -(-1f64).exp_m1()
    }

    /// `P(e^{-x} > m)`.
    pub fn tail(m: f64) -> f64 {
        if m <= 0.0 {
            1.0
        } else {
            (-m.ln()).clamp(0.0, 1.0)
        }
    }
}

impl TargetModel for ExpToy {
    type Point = f64;

    fn dim(&self) -> usize {
        1
    }

    fn max_likelihood(&self) -> Option<f64> {
        Some(1.0)
    }

    fn log_likelihood(&self, x: &f64) -> f64 {
        -x
    }

    fn likelihood(&self, x: &f64) -> f64 {
        (-x).exp()
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample<f64> {
        let x: f64 = rng.random();
        self.evaluate(x)
    }

    /// Independent exact draw from `U(0, min(1, -ln threshold))`.
    fn constrained_step<R: Rng + ?Sized>(
        &self,
        sample: &mut Sample<f64>,
        threshold: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if !sample.exceeds(threshold) {
            return Err(Error::Contract("entry state does not exceed the threshold"));
        }
        let hi = if threshold <= 0.0 {
            1.0
        } else {
            (-threshold.ln()).min(1.0)
        };
        loop {
            let u: f64 = rng.random();
            let s = self.evaluate(u * hi);
            if s.exceeds(threshold) {
                *sample = s;
                return Ok(true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_toy_stays_above_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = UniformToy.evaluate(0.95);
        for _ in 0..10_000 {
            UniformToy.constrained_step(&mut s, 0.9, &mut rng).unwrap();
            assert!(s.point > 0.9 && s.point <= 1.0);
        }
    }

    #[test]
    fn exp_toy_tail_and_evidence() {
        assert!((ExpToy::evidence() - 0.6321205588285577).abs() < 1e-15);
        assert_eq!(ExpToy::tail(1.0), 0.0);
        assert_eq!(ExpToy::tail(0.0), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = ExpToy.evaluate(0.1);
        for _ in 0..10_000 {
            ExpToy.constrained_step(&mut s, 0.8, &mut rng).unwrap();
            assert!(s.likelihood > 0.8);
        }
    }
}
