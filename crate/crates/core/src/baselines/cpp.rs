//! Conditional-probability product: `Ẑ(γ) = Π_t p̂_t` over a ladder of
//! thresholds, each stage estimated from a chain confined above the
//! previous threshold.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::model::{Sample, TargetModel};
use crate::stats::upper_quantile;
use crate::{Error, Result};

const MAX_STAGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CppResult {
    pub estimate: f64,
    /// Thresholds `m_1 < … < m_{T-1}` cut by the quantile rule.
    pub levels: Vec<f64>,
    /// Fraction of final-stage draws above `γ`.
    pub final_fraction: f64,
    pub stages: usize,
    /// Kernel applications plus prior draws.
    pub evaluations: u64,
}

fn run_stage<M, R>(model: &M, start: &Sample<M::Point>, threshold: f64, n0: usize, rng: &mut R) -> Result<Vec<Sample<M::Point>>>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    let mut state = start.clone();
    let mut out = Vec::with_capacity(n0);
    for _ in 0..n0 {
        model.constrained_step(&mut state, threshold, rng)?;
        out.push(state.clone());
    }
    Ok(out)
}

fn pick_above<P: Clone, R: Rng + ?Sized>(samples: &[Sample<P>], threshold: f64, rng: &mut R) -> Option<Sample<P>> {
    let above: Vec<&Sample<P>> = samples.iter().filter(|s| s.exceeds(threshold)).collect();
    if above.is_empty() {
        return None;
    }
    Some(above[rng.random_range(0..above.len())].clone())
}

/// Sequential product estimator with quantile-cut levels.
///
/// Stage 0 uses `n0` prior draws; each later stage runs `n0` kernel
/// applications above the latest threshold, started from a uniformly chosen
/// survivor of the previous stage. The threshold of each new stage is the
/// `(1 - ρ)`-quantile of the previous stage's likelihoods; once that
/// quantile reaches `γ` the estimate is `ρ^{T-1}` times the fraction of
/// final-stage draws above `γ`.
pub fn cpp_estimate<M, R>(model: &M, gamma: f64, rho: f64, n0: usize, rng: &mut R) -> Result<CppResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    if n0 < 2 {
        return Err(Error::Config("stages need at least two draws"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Config("rho must lie in (0, 1)"));
    }
    let mut samples: Vec<Sample<M::Point>> = (0..n0).map(|_| model.sample_prior(rng)).collect();
    let mut evaluations = n0 as u64;
    let mut levels = Vec::new();
    let mut threshold = 0.0;
    loop {
        let mut ls: Vec<f64> = samples.iter().map(|s| s.likelihood).collect();
        let q = upper_quantile(&mut ls, rho).ok_or(Error::EmptyBatch)?;
        if q >= gamma {
            let above = samples.iter().filter(|s| s.exceeds(gamma)).count();
            let fraction = above as f64 / n0 as f64;
            let stages = levels.len() + 1;
            return Ok(CppResult {
                estimate: rho.powi(levels.len() as i32) * fraction,
                levels,
                final_fraction: fraction,
                stages,
                evaluations,
            });
        }
        if !(q > threshold) {
            return Err(Error::DegenerateQuantile(q));
        }
        if levels.len() >= MAX_STAGES {
            return Err(Error::StageFailure {
                stage: levels.len(),
                level: q,
            });
        }
        threshold = q;
        levels.push(q);
        let start = pick_above(&samples, threshold, rng).ok_or(Error::DegenerateQuantile(q))?;
        samples = run_stage(model, &start, threshold, n0, rng)?;
        evaluations += n0 as u64;
    }
}

/// Product of stage fractions over a fixed ladder `0 = m_0 < m_1 < …`.
///
/// The last entry of `thresholds` is the target; stage `t` draws `n` points
/// above `m_t` and records the fraction exceeding `m_{t+1}`. Returns zero if
/// a stage has no survivor.
pub fn product_estimate<M, R>(model: &M, thresholds: &[f64], n: usize, rng: &mut R) -> Result<f64>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    if n == 0 || thresholds.len() < 2 || thresholds[0] != 0.0 {
        return Err(Error::Config("need n > 0 and a ladder starting at zero"));
    }
    let mut samples: Vec<Sample<M::Point>> = (0..n).map(|_| model.sample_prior(rng)).collect();
    let mut product = 1.0;
    for t in 1..thresholds.len() {
        let next = thresholds[t];
        let above = samples.iter().filter(|s| s.exceeds(next)).count();
        product *= above as f64 / n as f64;
        if t + 1 == thresholds.len() {
            break;
        }
        let Some(start) = pick_above(&samples, next, rng) else {
            return Ok(0.0);
        };
        samples = run_stage(model, &start, next, n, rng)?;
    }
    Ok(product)
}

/// Squared relative error of a product of independent stage estimates,
/// `Π_t (σ_t² / μ_t² + 1) - 1`, from `(μ_t, σ_t²)` pairs.
pub fn product_variance(stages: &[(f64, f64)]) -> f64 {
    stages
        .iter()
        .map(|(mean, var)| var / (mean * mean) + 1.0)
        .product::<f64>()
        - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ShortestPathModel, UniformToy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_threshold_is_single_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = cpp_estimate(&ShortestPathModel::default(), 0.01, (-1f64).exp(), 1000, &mut rng).unwrap();
        assert_eq!(r.stages, 1);
        assert!(r.levels.is_empty());
        assert_eq!(r.estimate, r.final_fraction);
    }

    #[test]
    fn uniform_toy_levels_follow_quantiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = 0.5;
        let r = cpp_estimate(&UniformToy, 0.99, rho, 20_000, &mut rng).unwrap();
        for (t, m) in r.levels.iter().enumerate() {
            assert!((m - UniformToy::exact_level(rho, t + 1)).abs() < 0.02);
        }
        assert!((r.estimate / 0.01 - 1.0).abs() < 0.2);
    }

    #[test]
    fn variance_formula() {
        assert_eq!(product_variance(&[]), 0.0);
        assert!((product_variance(&[(0.5, 0.01), (0.5, 0.01)]) - (1.04f64 * 1.04 - 1.0)).abs() < 1e-15);
    }
}
