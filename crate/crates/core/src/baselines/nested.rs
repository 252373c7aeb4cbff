//! Nested sampling with deterministic shrinkage `X ← (1 - 1/N) X`.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::model::{Sample, TargetModel};
use crate::stats::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NestedConfig {
    pub particles: usize,
    /// Kernel applications per replacement.
    pub mcmc_steps: usize,
    /// Stop once the remaining mass times the likelihood bound is below
    /// `tolerance` times the running evidence.
    pub tolerance: f64,
    pub max_replacements: u64,
    /// Keep the dead-point likelihoods.
    pub keep_ladder: bool,
}

impl NestedConfig {
    pub fn new(particles: usize, mcmc_steps: usize) -> Self {
        Self {
            particles,
            mcmc_steps,
            tolerance: 1e-6,
            max_replacements: u64::MAX,
            keep_ladder: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NestedResult {
    pub estimate: f64,
    pub replacements: u64,
    /// Prior mass `X` left when the loop stopped.
    pub remaining_mass: f64,
    /// Likelihoods of the discarded points in order, when requested.
    pub ladder: Vec<f64>,
    /// Replacements whose copied survivor sat on the threshold, so the
    /// kernel could not be applied.
    pub stalls: u64,
    /// Kernel moves that were rejected.
    pub rejections: u64,
    /// Whether the analytic likelihood bound drove the stopping rule.
    pub known_bound: bool,
}

#[derive(Debug, Clone, Copy)]
struct Live {
    likelihood: f64,
    index: usize,
}

impl PartialEq for Live {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Live {}

impl PartialOrd for Live {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reversed so the max-heap pops the lowest likelihood first.
impl Ord for Live {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .likelihood
            .total_cmp(&self.likelihood)
            .then(other.index.cmp(&self.index))
    }
}

/// Runs nested sampling and returns the evidence estimate.
///
/// Each iteration removes the live point with the lowest likelihood `L*`,
/// adds `L* X / N` to the evidence, shrinks `X` by `1 - 1/N` and replaces
/// the point by a copy of a random survivor moved `mcmc_steps` times under
/// `L > L*`. The loop runs while `L_max X > ε Z`, using the model's analytic
/// bound when it has one and the largest live likelihood otherwise; the
/// live points then contribute `(X / N) Σ L`.
pub fn nested_sampling<M, R>(model: &M, cfg: &NestedConfig, rng: &mut R) -> Result<NestedResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    let n = cfg.particles;
    if n < 2 {
        return Err(Error::Config("nested sampling needs at least two particles"));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::Config("tolerance must be positive"));
    }
    let mut live: Vec<Sample<M::Point>> = (0..n).map(|_| model.sample_prior(rng)).collect();
    let mut heap: BinaryHeap<Live> = live
        .iter()
        .enumerate()
        .map(|(index, s)| Live {
            likelihood: s.likelihood,
            index,
        })
        .collect();
    let mut live_max = live.iter().map(|s| s.likelihood).fold(f64::NEG_INFINITY, f64::max);
    let bound = model.max_likelihood();
    let shrink = 1.0 - 1.0 / n as f64;
    let inv_n = 1.0 / n as f64;

    let mut z = CompensatedSum::default();
    let mut x = 1.0f64;
    let mut replacements = 0u64;
    let mut stalls = 0u64;
    let mut rejections = 0u64;
    let mut ladder = Vec::new();

    while replacements < cfg.max_replacements {
        let l_bound = bound.unwrap_or(live_max);
        if !(l_bound * x > cfg.tolerance * z.value()) {
            break;
        }
        let worst = heap.pop().expect("heap holds every particle");
        let threshold = worst.likelihood;
        z.add(threshold * x * inv_n);
        x *= shrink;
        replacements += 1;
        if cfg.keep_ladder {
            ladder.push(threshold);
        }

        let mut pick = rng.random_range(0..n - 1);
        if pick >= worst.index {
            pick += 1;
        }
        let mut fresh = live[pick].clone();
        if fresh.exceeds(threshold) {
            for _ in 0..cfg.mcmc_steps {
                if !model.constrained_step(&mut fresh, threshold, rng)? {
                    rejections += 1;
                }
            }
        } else {
            stalls += 1;
        }
        live_max = live_max.max(fresh.likelihood);
        heap.push(Live {
            likelihood: fresh.likelihood,
            index: worst.index,
        });
        live[worst.index] = fresh;
    }

    let mut rest = CompensatedSum::default();
    for s in &live {
        rest.add(s.likelihood);
    }
    z.add(x * inv_n * rest.value());
    Ok(NestedResult {
        estimate: z.value(),
        replacements,
        remaining_mass: x,
        ladder,
        stalls,
        rejections,
        known_bound: bound.is_some(),
    })
}
