//! Diffuse nested sampling.
//!
//! A single chain moves on `(x, j)` with target
//! `Σ_j w_j π(x) I(L(x) > L_j) / X_j`, where `L_j` are likelihood levels
//! with enclosed prior masses `X_j`. While levels are being created the
//! mixture weights favour the top, `w_j ∝ e^{κ (j - J)}`; likelihoods seen
//! above the top level are buffered and a new level is cut at their
//! `(1 - ρ)`-quantile, with nominal mass `X_{J+1} = ρ X_J`. Afterwards the
//! weights are uniform, the masses are refined from how often draws at
//! level `j` clear level `j + 1`, and the evidence is assembled as
//! `Σ_j X_j E_j[L I(L ≤ L_{j+1})]`.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::model::TargetModel;
use crate::stats::{upper_quantile, CompensatedSum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiffuseConfig {
    /// Log-weight slope `κ` favouring upper levels while they are built.
    pub kappa: f64,
    pub rho: f64,
    /// Draws above the top level needed to cut a new one.
    pub new_level_samples: usize,
    pub max_levels: usize,
    /// Iteration cap for the level-creation phase.
    pub creation_budget: u64,
    /// Iterations of the estimation phase.
    pub chain_length: u64,
    /// Pseudo-count pulling refined mass ratios toward `ρ`.
    pub pseudo_count: f64,
    /// Estimation iterations between refreshes of the level masses used by
    /// the index moves; zero keeps the nominal masses `ρ^j`.
    pub refine_every: u64,
    /// Level creation stops once `X_J (L_max - L_J)` is below this fraction
    /// of the running evidence.
    pub tail_tolerance: f64,
}

impl Default for DiffuseConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            rho: (-1f64).exp(),
            new_level_samples: 5_000,
            max_levels: 100,
            creation_budget: 10_000_000,
            chain_length: 1_000_000,
            pseudo_count: 100.0,
            refine_every: 10_000,
            tail_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiffuseResult {
    pub estimate: f64,
    pub levels: Vec<f64>,
    pub log_masses: Vec<f64>,
    pub visits: Vec<u64>,
    pub creation_iterations: u64,
    pub rejections: u64,
}

struct Chain<'a, M: TargetModel> {
    model: &'a M,
    state: crate::model::Sample<M::Point>,
    level: usize,
    rejections: u64,
}

impl<M: TargetModel> Chain<'_, M> {
    /// One `x` move at the current level and one index move `j → j ± 1`.
    fn step<R: Rng + ?Sized>(&mut self, levels: &[f64], log_mass: &[f64], kappa: f64, rng: &mut R) -> Result<()> {
        if !self.model.constrained_step(&mut self.state, levels[self.level], rng)? {
            self.rejections += 1;
        }
        let top = levels.len() - 1;
        let j = self.level;
        let proposal = if rng.random::<bool>() {
            (j + 1).min(top)
        } else {
            j.saturating_sub(1)
        };
        if proposal != j && self.state.exceeds(levels[proposal]) {
            let log_accept = kappa * (proposal as f64 - j as f64) + log_mass[j] - log_mass[proposal];
            if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
                self.level = proposal;
            }
        }
        Ok(())
    }
}

/// Runs diffuse nested sampling and returns the evidence estimate.
pub fn diffuse_nested_sampling<M, R>(model: &M, cfg: &DiffuseConfig, rng: &mut R) -> Result<DiffuseResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    if !(cfg.kappa > 0.0) || !(cfg.rho > 0.0 && cfg.rho < 1.0) || cfg.new_level_samples == 0 {
        return Err(Error::Config("invalid diffuse nested sampling parameters"));
    }
    let mut levels = alloc::vec![0.0f64];
    let mut log_mass = alloc::vec![0.0f64];
    let mut chain = Chain {
        model,
        state: model.sample_prior(rng),
        level: 0,
        rejections: 0,
    };
    let mut buffer: Vec<f64> = Vec::with_capacity(cfg.new_level_samples);
    let mut creation_iterations = 0u64;
    let ln_rho = cfg.rho.ln();

    while levels.len() <= cfg.max_levels && creation_iterations < cfg.creation_budget {
        chain.step(&levels, &log_mass, cfg.kappa, rng)?;
        creation_iterations += 1;
        let top = levels.len() - 1;
        if chain.state.exceeds(levels[top]) {
            buffer.push(chain.state.likelihood);
        }
        if buffer.len() >= cfg.new_level_samples {
            let max_seen = model
                .max_likelihood()
                .unwrap_or_else(|| buffer.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let q = upper_quantile(&mut buffer, cfg.rho).ok_or(Error::EmptyBatch)?;
            if !(q > levels[top]) {
                return Err(Error::DegenerateQuantile(q));
            }
            levels.push(q);
            log_mass.push(log_mass[top] + ln_rho);
            buffer.retain(|&l| l > q);
            let z = nominal_evidence(&levels, &log_mass);
            if (log_mass[top + 1]).exp() * (max_seen - q) < cfg.tail_tolerance * z {
                break;
            }
        }
    }

    let n_levels = levels.len();
    let mut visits = alloc::vec![0u64; n_levels];
    let mut exceed = alloc::vec![0u64; n_levels];
    let mut sums: Vec<CompensatedSum> = alloc::vec![CompensatedSum::default(); n_levels];
    let mut refined = log_mass.clone();
    for i in 0..cfg.chain_length {
        chain.step(&levels, &refined, 0.0, rng)?;
        let j = chain.level;
        let l = chain.state.likelihood;
        visits[j] += 1;
        if j + 1 < n_levels && l > levels[j + 1] {
            exceed[j] += 1;
        } else {
            sums[j].add(l);
        }
        if cfg.refine_every > 0 && (i + 1) % cfg.refine_every == 0 {
            refine(&mut refined, &visits, &exceed, cfg);
        }
    }
    refine(&mut refined, &visits, &exceed, cfg);
    let mut z = CompensatedSum::default();
    for j in 0..n_levels {
        if visits[j] > 0 {
            z.add(refined[j].exp() * sums[j].value() / visits[j] as f64);
        }
    }
    Ok(DiffuseResult {
        estimate: z.value(),
        levels,
        log_masses: refined,
        visits,
        creation_iterations,
        rejections: chain.rejections,
    })
}

/// Log masses `ln X_j` from the observed exceedance ratios, each pulled
/// toward `ρ` by `pseudo_count` fictitious visits.
fn refine(log_mass: &mut [f64], visits: &[u64], exceed: &[u64], cfg: &DiffuseConfig) {
    for j in 1..log_mass.len() {
        let ratio = (exceed[j - 1] as f64 + cfg.pseudo_count * cfg.rho) / (visits[j - 1] as f64 + cfg.pseudo_count);
        log_mass[j] = log_mass[j - 1] + ratio.ln();
    }
}

/// Lower sum `Σ_j (X_j - X_{j+1}) L_j` over the nominal
/// ladder, used only for the level-creation stopping rule.
fn nominal_evidence(levels: &[f64], log_mass: &[f64]) -> f64 {
    let mut z = 0.0;
    for j in 1..levels.len() {
        z += (log_mass[j - 1].exp() - log_mass[j].exp()) * levels[j - 1];
    }
    z + log_mass[levels.len() - 1].exp() * levels[levels.len() - 1]
}
