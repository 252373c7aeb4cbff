//! Cross-entropy importance sampling for the exponential-weight network.
//!
//! The blanket is a product of exponentials with scales `v`. Each stage
//! draws a pilot sample, raises the working level to the `(1 - ρ)`-quantile
//! of the path lengths (capped at `γ`) and refits `v` in closed form,
//! `v̂ = Σ I w x / Σ I w`, with likelihood ratios `w(x; u, v)`.

use alloc::vec::Vec;

use rand::Rng;

use crate::model::TargetModel;
use crate::models::{EdgeWeights, ShortestPathModel};
use crate::stats::{upper_quantile, CompensatedSum};
use crate::{Error, Result};

/// Below this effective sample size the final estimate is flagged.
const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CeParams {
    pub gamma: f64,
    pub rho: f64,
    /// Pilot draws per adaptation stage.
    pub pilot: usize,
    /// Total budget; the final stage gets `n_total - T pilot` draws.
    pub n_total: usize,
    /// Optional update `v ← α v̂ + (1 - α) v`; `None` applies the raw fit.
    pub smoothing: Option<f64>,
    pub max_stages: usize,
}

impl CeParams {
    pub fn new(gamma: f64, pilot: usize, n_total: usize) -> Self {
        Self {
            gamma,
            rho: 0.1,
            pilot,
            n_total,
            smoothing: None,
            max_stages: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportanceEstimate {
    pub estimate: f64,
    /// `(Σ w)² / Σ w²` over the draws with `S > γ`.
    pub effective_sample_size: f64,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CeResult {
    pub estimate: f64,
    pub scales: EdgeWeights,
    pub levels: Vec<f64>,
    pub stages: usize,
    pub final_size: usize,
    pub effective_sample_size: f64,
    /// Set when the final weights are degenerate.
    pub degenerate: bool,
}

/// Importance-sampling average `(1/n) Σ I(S(x_i) > γ) w(x_i; u, v)` with
/// `x_i` drawn from the exponential blanket with scales `v`.
pub fn ce_importance_estimate<R: Rng + ?Sized>(
    model: &ShortestPathModel,
    scales: &EdgeWeights,
    gamma: f64,
    n: usize,
    rng: &mut R,
) -> Result<ImportanceEstimate> {
    if n == 0 {
        return Err(Error::Config("sample size must be positive"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut hits = 0u64;
    for _ in 0..n {
        let x = ShortestPathModel::draw_exponentials(scales, rng);
        if model.likelihood(&x) > gamma {
            let w = model.likelihood_ratio(&x, scales);
            sum += w;
            sum_sq += w * w;
            hits += 1;
        }
    }
    let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 };
    Ok(ImportanceEstimate {
        estimate: sum / n as f64,
        effective_sample_size: ess,
        hits,
    })
}

/// Multi-level cross-entropy estimate of `P(S(x) > γ)`.
pub fn ce_estimate<R: Rng + ?Sized>(model: &ShortestPathModel, params: &CeParams, rng: &mut R) -> Result<CeResult> {
    if !(params.rho > 0.0 && params.rho < 1.0) || params.pilot == 0 || !(params.gamma > 0.0) {
        return Err(Error::Config("invalid cross-entropy parameters"));
    }
    if let Some(a) = params.smoothing {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Config("smoothing must lie in (0, 1]"));
        }
    }
    let u = *model.scales();
    let mut v = u;
    let mut levels = Vec::new();
    let mut xs: Vec<EdgeWeights> = Vec::with_capacity(params.pilot);
    let mut s: Vec<f64> = Vec::with_capacity(params.pilot);
    loop {
        let stage = levels.len() + 1;
        if stage > params.max_stages {
            return Err(Error::StageFailure {
                stage,
                level: levels.last().copied().unwrap_or(0.0),
            });
        }
        xs.clear();
        s.clear();
        for _ in 0..params.pilot {
            let x = ShortestPathModel::draw_exponentials(&v, rng);
            s.push(model.likelihood(&x));
            xs.push(x);
        }
        let mut sorted = s.clone();
        let level = upper_quantile(&mut sorted, params.rho)
            .ok_or(Error::EmptyBatch)?
            .min(params.gamma);
        let mut den = CompensatedSum::default();
        let mut num = [CompensatedSum::default(); 5];
        for (x, &sx) in xs.iter().zip(&s) {
            if sx > level {
                let w = model.likelihood_ratio(x, &v);
                den.add(w);
                for j in 0..5 {
                    num[j].add(w * x[j]);
                }
            }
        }
        if !(den.value() > 0.0) {
            return Err(Error::StageFailure { stage, level });
        }
        for j in 0..5 {
            let fit = num[j].value() / den.value();
            v[j] = match params.smoothing {
                Some(a) => a * fit + (1.0 - a) * v[j],
                None => fit,
            };
        }
        levels.push(level);
        if level >= params.gamma {
            break;
        }
    }
    let stages = levels.len();
    let used = stages * params.pilot;
    if used >= params.n_total {
        return Err(Error::Config("pilot stages exhaust the budget"));
    }
    let final_size = params.n_total - used;
    let fin = ce_importance_estimate(model, &v, params.gamma, final_size, rng)?;
    Ok(CeResult {
        estimate: fin.estimate,
        scales: v,
        levels,
        stages,
        final_size,
        effective_sample_size: fin.effective_sample_size,
        degenerate: fin.effective_sample_size < MIN_EFFECTIVE_SAMPLES,
    })
}
