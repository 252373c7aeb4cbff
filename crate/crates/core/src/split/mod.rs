//! The split sampler.
//!
//! The joint chain on `(x, m)` targets `π_SS(x, m) ∝ ω(m) I(L(x) > m) π(x)`.
//! Each iteration moves `x` with the model's constrained kernel at the
//! current threshold and then redraws `m` from `ω` restricted to
//! `[0, L(x))`. The marginal of `x` is `∝ Ω(L(x)) π(x)`, so reweighting each
//! draw by `1 / Ω(L(x))` recovers the prior and yields
//! `Ẑ(m) = Σ_{L_i > m} Ω(L_i)^{-1} / Σ_i Ω(L_i)^{-1}`.
//!
//! A run has two phases. [`build_levels`] grows a grid of thresholds one
//! quantile at a time; [`run_estimation`] then runs the chain on the fixed
//! grid while the self-balancing rule `Ω_t = 1 / Ẑ_t` tracks the running
//! estimates.

mod adapt;
mod batch;
mod estimation;
mod levels;

use alloc::vec::Vec;

pub use adapt::{flat_histogram_update, rebalance_weights, step_size};
pub use batch::{
    estimate_z, estimate_z_of_m, integrate_level_estimates, rao_blackwell_marginal, SampleBatch,
};
pub use estimation::run_estimation;
pub use levels::{build_levels, LevelConstruction};

use num_traits::Float;
use rand::Rng;

use crate::model::TargetModel;
use crate::weight::{LevelGrid, WeightMode};
use crate::{Error, Result};

/// Tuning of a split-sampling run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitConfig {
    /// Target conditional mass `Z_t / Z_{t-1}` between consecutive levels.
    pub rho: f64,
    /// Visits to the current top level required before a new level is cut.
    pub n_level: u64,
    /// Prior strength of the initial estimates `Ẑ_t = ρ^t`.
    pub nu_init: f64,
    /// Boosting factor `Λ` favouring upper levels during construction.
    pub boost: f64,
    /// Extra weight `β` on the newest level; `None` boosts every level
    /// geometrically instead.
    pub top_weight: Option<f64>,
    pub t_max: usize,
    /// Iterations of the estimation phase.
    pub n: u64,
    /// Rare-event threshold `γ`; level building stops once it is reached.
    pub gamma: Option<f64>,
    pub weight_mode: WeightMode,
    /// Kernel applications per joint iteration.
    pub thinning: usize,
    /// Iteration budget for collecting the visits of one level.
    pub max_level_iterations: u64,
    /// Evidence mode stops adding levels once the estimated mass above the
    /// top level falls below this fraction of the running integral.
    pub tail_tolerance: f64,
    /// Relative size below which an increment to `ν_t` is skipped.
    pub update_cutoff: f64,
    /// Record `(iteration, level, ln Ω_level)` every this many iterations;
    /// zero disables the trace.
    pub trace_every: u64,
    /// Keep every `record_every`-th estimation draw in a [`SampleBatch`];
    /// zero keeps none.
    pub record_every: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            rho: (-1f64).exp(),
            n_level: 10_000,
            nu_init: 10_000.0,
            boost: 0.1,
            top_weight: None,
            t_max: 100,
            n: 1_000_000,
            gamma: None,
            weight_mode: WeightMode::Discrete,
            thinning: 1,
            max_level_iterations: 100_000_000,
            tail_tolerance: 1e-4,
            update_cutoff: 1e-16,
            trace_every: 0,
            record_every: 0,
        }
    }
}

impl SplitConfig {
    /// Settings for `P(L(x) > γ)`.
    pub fn rare_event(gamma: f64, n: u64) -> Self {
        Self {
            gamma: Some(gamma),
            n,
            ..Self::default()
        }
    }

    /// Settings for the evidence `∫ L π`.
    ///
    /// Level construction collects `5 × 10^4` visits per level so that a
    /// narrow mode hidden behind a broad one is found before the broad one
    /// is exhausted.
    pub fn evidence(n: u64) -> Self {
        Self {
            n_level: 50_000,
            nu_init: 5_000.0,
            boost: 10.0,
            n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config("rho must lie in (0, 1)"));
        }
        if self.n_level == 0 || self.n == 0 || self.thinning == 0 {
            return Err(Error::Config("counts must be positive"));
        }
        if !(self.nu_init > 0.0 && self.nu_init.is_finite()) {
            return Err(Error::Config("nu_init must be positive"));
        }
        if !(self.boost >= 0.0 && self.boost.is_finite()) {
            return Err(Error::Config("boost must be nonnegative"));
        }
        if let Some(b) = self.top_weight {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config("top weight must be positive"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config("gamma must be positive"));
            }
        }
        // Linear visit accumulators hold values down to ρ^{T_max}.
        if self.t_max as f64 * -self.rho.ln() > 600.0 {
            return Err(Error::Config("t_max * |ln rho| must stay below 600"));
        }
        if !(self.tail_tolerance > 0.0) || !(self.update_cutoff >= 0.0) {
            return Err(Error::Config("tolerances must be positive"));
        }
        Ok(())
    }
}

/// A point of the level-visit trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub iteration: u64,
    pub level: usize,
    pub log_omega: f64,
}

/// Output of [`run_estimation`] and [`split_sample`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitResult {
    /// Final grid with `Ẑ_t = ν_t / ν_0` and `Ω_t = 1 / Ẑ_t`.
    pub grid: LevelGrid,
    /// The headline number: `Ẑ_T` in rare-event mode, the evidence
    /// otherwise.
    pub estimate: f64,
    /// `∫ Ẑ(m) dm` from the piecewise-exponential interpolation of the grid
    /// plus the tail above the top level.
    pub integrated: f64,
    /// Estimated contribution of likelihoods above the top threshold.
    pub tail: f64,
    /// `Σ Ω(L_i)^{-1} L_i / Σ Ω(L_i)^{-1}` accumulated along the run.
    pub weighted_mean: f64,
    /// Visits per level during estimation.
    pub visits: Vec<u64>,
    pub trace: Vec<TracePoint>,
    pub construction_iterations: u64,
    pub estimation_iterations: u64,
    pub batch: Option<SampleBatch>,
}

impl SplitResult {
    /// The step curve `(m_t, Ẑ_t)`.
    pub fn z_curve(&self) -> Vec<(f64, f64)> {
        self.grid
            .thresholds()
            .iter()
            .copied()
            .zip(self.grid.z_hat().iter().copied())
            .collect()
    }
}

/// Builds levels and runs the estimation phase.
pub fn split_sample<M, R>(model: &M, cfg: &SplitConfig, rng: &mut R) -> Result<SplitResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    let levels = build_levels(model, cfg, rng)?;
    run_estimation(model, levels, cfg, rng)
}
