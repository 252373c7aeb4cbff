use alloc::boxed::Box;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::batch::integrate_level_estimates;
use super::SplitConfig;
use crate::model::{Sample, TargetModel};
use crate::stats::upper_quantile;
use crate::weight::{build_cumulative, LevelGrid, WeightMode};
use crate::{Error, Result};

/// A grid built by [`build_levels`] together with the chain state it ended
/// in, so estimation can continue from there.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelConstruction<P> {
    pub grid: LevelGrid,
    pub state: Sample<P>,
    pub level: usize,
    /// Joint-chain iterations spent building the grid.
    pub iterations: u64,
}

/// `ln Ω_t` for a new top level `t` with estimate `z`.
fn top_log_omega(cfg: &SplitConfig, t: usize, z: f64) -> f64 {
    let lam = cfg.boost;
    let t = t as f64;
    match cfg.top_weight {
        None => lam * t - z.ln(),
        Some(beta) => {
            // ln((e^{Λt} - 1) / (e^Λ - 1)), which tends to ln t as Λ → 0.
            let ratio = if lam == 0.0 {
                t.ln()
            } else {
                lam * (t - 1.0) + (-(-lam * t).exp_m1()).ln() - (-(-lam).exp_m1()).ln()
            };
            beta.ln() + ratio - z.ln()
        }
    }
}

/// Grows the level grid from the root.
///
/// While the grid has `T` levels the joint chain runs with discrete weights
/// on those levels until it has drawn `N_level` points while sitting at
/// level `T - 1`; the `(1 - ρ)`-quantile of their likelihoods becomes
/// `m_T` with the initial estimate `Ẑ_T = ρ^T`. In rare-event mode the
/// final level is pinned at `γ` with `Ẑ_T` set to `Ẑ_{T-1}` times the
/// fraction of level-`(T-1)` draws above `γ`.
pub fn build_levels<M, R>(model: &M, cfg: &SplitConfig, rng: &mut R) -> Result<LevelConstruction<M::Point>>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut grid = LevelGrid::root();
    let mut state = model.sample_prior(rng);
    if !state.exceeds(0.0) {
        return Err(Error::Domain("prior draw has zero likelihood"));
    }
    let mut level = 0usize;
    let mut iterations = 0u64;
    let mut recorded: Vec<f64> = Vec::with_capacity(cfg.n_level as usize);

    while grid.top() < cfg.t_max {
        let below = grid.top();
        let weight = build_cumulative(&grid, WeightMode::Discrete)?;
        recorded.clear();
        let mut spent = 0u64;
        while (recorded.len() as u64) < cfg.n_level {
            if spent >= cfg.max_level_iterations {
                return Err(Error::LevelConstruction {
                    partial: Box::new(grid),
                    iterations,
                });
            }
            let threshold = grid.threshold(level);
            for _ in 0..cfg.thinning {
                model.constrained_step(&mut state, threshold, rng)?;
            }
            spent += 1;
            iterations += 1;
            if level == below {
                recorded.push(state.likelihood);
            }
            level = weight.sample_level_index(state.likelihood, rng)?;
        }

        let max_seen = model
            .max_likelihood()
            .unwrap_or_else(|| recorded.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let q = upper_quantile(&mut recorded, cfg.rho).ok_or(Error::EmptyBatch)?;
        let t = below + 1;

        if let Some(gamma) = cfg.gamma {
            if q >= gamma {
                let above = recorded.iter().filter(|&&l| l > gamma).count();
                if above == 0 {
                    return Err(Error::StageFailure {
                        stage: t,
                        level: gamma,
                    });
                }
                let z = grid.z_hat()[below] * above as f64 / recorded.len() as f64;
                push_boosted(&mut grid, cfg, gamma, z)?;
                break;
            }
        }
        if !(q > grid.threshold(below)) {
            return Err(Error::DegenerateQuantile(q));
        }
        let z = cfg.rho.powi(t as i32);
        push_boosted(&mut grid, cfg, q, z)?;

        if cfg.gamma.is_none() {
            let integral = integrate_level_estimates(&grid)?;
            let tail = z * (max_seen - q).max(0.0);
            if tail < cfg.tail_tolerance * integral {
                break;
            }
        }
    }
    Ok(LevelConstruction {
        grid,
        state,
        level,
        iterations,
    })
}

fn push_boosted(grid: &mut LevelGrid, cfg: &SplitConfig, threshold: f64, z: f64) -> Result<()> {
    let t = grid.top() + 1;
    if cfg.top_weight.is_some() && t > 1 {
        let prev = t - 1;
        let w = cfg.boost * prev as f64 - grid.z_hat()[prev].ln();
        grid.set_log_omega(prev, w);
    }
    grid.push_level(threshold, z, top_log_omega(cfg, t, z))?;
    grid.validate()
}
