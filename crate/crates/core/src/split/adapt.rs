//! Optional adaptive rules for the level weights, working on the point
//! masses `ω_t` of a discrete weight.

use alloc::vec::Vec;

use num_traits::Float;

use crate::stats::log_add_exp;
use crate::weight::{CumulativeWeight, WeightMode};
use crate::{Error, Result};

fn log_jumps(weight: &CumulativeWeight) -> Result<(Vec<f64>, Vec<f64>)> {
    let table = weight.table();
    if table.is_empty() {
        return Err(Error::Config("adaptive rules need a piecewise weight"));
    }
    let knots = table.iter().map(|p| p.0).collect();
    let mut jumps = Vec::with_capacity(table.len());
    let mut prev = f64::NEG_INFINITY;
    for &(_, w) in &table {
        jumps.push(if w > prev {
            w + (-(prev - w).exp()).ln_1p()
        } else {
            f64::NEG_INFINITY
        });
        prev = w;
    }
    Ok((knots, jumps))
}

/// Rebuilds a weight from point masses `ln ω_t`, scaled so the largest mass
/// is one.
fn from_log_jumps(knots: Vec<f64>, mut jumps: Vec<f64>, mode: WeightMode) -> Result<CumulativeWeight> {
    let top = jumps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for j in &mut jumps {
        *j -= top;
    }
    let mut log_omega = Vec::with_capacity(jumps.len());
    let mut acc = f64::NEG_INFINITY;
    for j in jumps {
        acc = log_add_exp(acc, j);
        log_omega.push(acc);
    }
    CumulativeWeight::piecewise(knots, log_omega, mode)
}

fn normalised(v: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || v.iter().any(|x| *x < 0.0) {
        return Err(Error::Domain("visit measure must be nonnegative and not all zero"));
    }
    Ok(v.iter().map(|x| x / s).collect())
}

/// Moves weight away from over-visited levels.
///
/// Each visited level's mass is multiplied by `φ_t / μ_t`, scaled so the
/// smallest factor is one and capped at `e^{log_cap}`. Unvisited levels keep
/// their mass.
pub fn rebalance_weights(
    visits: &[f64],
    weight: &CumulativeWeight,
    target: &[f64],
    log_cap: f64,
) -> Result<CumulativeWeight> {
    let (knots, mut jumps) = log_jumps(weight)?;
    if visits.len() != jumps.len() || target.len() != jumps.len() {
        return Err(Error::Config("visit and target vectors must match the grid"));
    }
    let mu = normalised(visits)?;
    let phi = normalised(target)?;
    let log_ratio: Vec<Option<f64>> = mu
        .iter()
        .zip(&phi)
        .map(|(m, p)| (*m > 0.0).then(|| p.ln() - m.ln()))
        .collect();
    let floor = log_ratio
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    for (j, r) in jumps.iter_mut().zip(&log_ratio) {
        if let Some(r) = r {
            *j += (r - floor).min(log_cap);
        }
    }
    from_log_jumps(knots, jumps, weight.mode().unwrap_or_default())
}

/// Stochastic-approximation step `ln ω_t ← ln ω_t - γ_n (μ_t - φ_t)`,
/// applied only when the flat-histogram condition `max_t |μ_t - φ_t| < c`
/// holds. Returns the (possibly unchanged) weight and whether the condition
/// held.
pub fn flat_histogram_update(
    visits: &[f64],
    weight: &CumulativeWeight,
    target: &[f64],
    step: f64,
    tolerance: f64,
) -> Result<(CumulativeWeight, bool)> {
    let (knots, mut jumps) = log_jumps(weight)?;
    if visits.len() != jumps.len() || target.len() != jumps.len() {
        return Err(Error::Config("visit and target vectors must match the grid"));
    }
    let mu = normalised(visits)?;
    let phi = normalised(target)?;
    let flat = mu.iter().zip(&phi).all(|(m, p)| (m - p).abs() < tolerance);
    if !flat {
        return Ok((weight.clone(), false));
    }
    for ((j, m), p) in jumps.iter_mut().zip(&mu).zip(&phi) {
        *j -= step * (m - p);
    }
    Ok((from_log_jumps(knots, jumps, weight.mode().unwrap_or_default())?, true))
}

/// Declining gain `γ_n = c n^{-α}` with `α ∈ [0.6, 0.7]`.
pub fn step_size(n: u64, scale: f64, alpha: f64) -> Result<f64> {
    if !(0.6..=0.7).contains(&alpha) {
        return Err(Error::Config("alpha must lie in [0.6, 0.7]"));
    }
    if n == 0 || !(scale > 0.0) {
        return Err(Error::Config("step index and scale must be positive"));
    }
    Ok(scale * (n as f64).powf(-alpha))
}
