use alloc::vec::Vec;

use num_traits::Float;

use crate::stats::{expm1_ratio, highest_below, CompensatedSum};
use crate::weight::LevelGrid;
use crate::{Error, Result};

/// Recorded draws of the split chain.
///
/// Each record holds the likelihood `L_i`, the level variable `m_i` it was
/// paired with and `ln Ω(L_i)` under the weight in force when it was drawn.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleBatch {
    pub likelihoods: Vec<f64>,
    pub levels: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl SampleBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, likelihood: f64, level: f64, log_weight: f64) -> Result<()> {
        if !(likelihood > level) {
            return Err(Error::Contract("record must satisfy L > m"));
        }
        self.likelihoods.push(likelihood);
        self.levels.push(level);
        self.log_weights.push(log_weight);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.likelihoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.likelihoods.is_empty()
    }

    /// Importance weights `Ω(L_i)^{-1}` scaled so the largest is one.
    fn scaled_inverse_weights(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let shift = self.log_weights.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(self.log_weights.iter().map(|w| (shift - w).exp()).collect())
    }
}

/// Rao-Blackwellised level marginal
/// `π̂_t = (1/N) Σ_i ω_t I(L_i > m_t) / Σ_s ω_s I(L_i > m_s)`
/// for the point masses `ω_t` of `grid`.
pub fn rao_blackwell_marginal(batch: &SampleBatch, grid: &LevelGrid) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let log_omega = grid.log_omega();
    // ln ω_t = ln(Ω_t - Ω_{t-1}); a flat step carries no mass.
    let log_jump: Vec<f64> = (0..log_omega.len())
        .map(|t| {
            if t == 0 {
                log_omega[0]
            } else if log_omega[t] > log_omega[t - 1] {
                log_omega[t] + (-(log_omega[t - 1] - log_omega[t]).exp()).ln_1p()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut acc = alloc::vec![CompensatedSum::default(); log_omega.len()];
    for &l in &batch.likelihoods {
        let Some(k) = highest_below(grid.thresholds(), l) else {
            return Err(Error::Contract("record below the root threshold"));
        };
        for t in 0..=k {
            acc[t].add((log_jump[t] - log_omega[k]).exp());
        }
    }
    let n = batch.len() as f64;
    Ok(acc.iter().map(|a| a.value() / n).collect())
}

/// `Ẑ(m) = Σ_{L_i > m} Ω(L_i)^{-1} / Σ_i Ω(L_i)^{-1}`.
pub fn estimate_z_of_m(batch: &SampleBatch, m: f64) -> Result<f64> {
    let w = batch.scaled_inverse_weights()?;
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (wi, &l) in w.iter().zip(&batch.likelihoods) {
        den.add(*wi);
        if l > m {
            num.add(*wi);
        }
    }
    Ok(num.value() / den.value())
}

/// `Ẑ = Σ_i Ω(L_i)^{-1} L_i / Σ_i Ω(L_i)^{-1}`, which equals `∫_0^∞ Ẑ(m) dm`.
pub fn estimate_z(batch: &SampleBatch) -> Result<f64> {
    let w = batch.scaled_inverse_weights()?;
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (wi, &l) in w.iter().zip(&batch.likelihoods) {
        den.add(*wi);
        num.add(wi * l);
    }
    Ok(num.value() / den.value())
}

/// Integrates the piecewise-exponential interpolant of `(m_t, Ẑ_t)` from
/// `0` to `m_T`:
/// `Σ_t (Ẑ_t - Ẑ_{t-1})(m_t - m_{t-1}) / ln(Ẑ_t / Ẑ_{t-1})`.
///
/// Flat segments contribute `Ẑ_t (m_t - m_{t-1})`.
pub fn integrate_level_estimates(grid: &LevelGrid) -> Result<f64> {
    let m = grid.thresholds();
    let z = grid.z_hat();
    if z.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("level estimates must be positive"));
    }
    let mut total = CompensatedSum::default();
    for t in 1..m.len() {
        let d = (z[t] / z[t - 1]).ln();
        // (Ẑ_t - Ẑ_{t-1}) / ln(Ẑ_t/Ẑ_{t-1}) = Ẑ_{t-1} (e^d - 1) / d
        total.add(z[t - 1] * expm1_ratio(d) * (m[t] - m[t - 1]));
    }
    Ok(total.value())
}
