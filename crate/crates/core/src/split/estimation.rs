use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::batch::{integrate_level_estimates, SampleBatch};
use super::levels::LevelConstruction;
use super::{SplitConfig, SplitResult, TracePoint};
use crate::model::TargetModel;
use crate::stats::{highest_below, CompensatedSum};
use crate::weight::WeightMode;
use crate::Result;

/// Self-balanced weights `Ω_t = ν_0 / ν_t` read straight from the visit
/// accumulators, so no weight object is rebuilt after each update.
#[derive(Debug, Clone)]
pub(crate) struct NuWeights {
    knots: Vec<f64>,
    sums: Vec<CompensatedSum>,
    nu: Vec<f64>,
    mode: WeightMode,
}

impl NuWeights {
    pub(crate) fn new(knots: Vec<f64>, initial: &[f64], mode: WeightMode) -> Self {
        Self {
            knots,
            sums: initial.iter().map(|&v| CompensatedSum::new(v)).collect(),
            nu: initial.to_vec(),
            mode,
        }
    }

    #[inline]
    pub(crate) fn top(&self) -> usize {
        self.knots.len() - 1
    }

    #[inline]
    pub(crate) fn ln_omega(&self, t: usize) -> f64 {
        (self.nu[0] / self.nu[t]).ln()
    }

    /// `ln Ω(L)` for a likelihood whose highest level below is `k`.
    #[inline]
    pub(crate) fn ln_eval(&self, likelihood: f64, k: usize) -> f64 {
        match self.mode {
            WeightMode::Discrete => self.ln_omega(k),
            WeightMode::Continuous => {
                if k == self.top() {
                    self.ln_omega(k)
                } else {
                    let rate = (self.nu[k] / self.nu[k + 1]).ln() / (self.knots[k + 1] - self.knots[k]);
                    self.ln_omega(k) + rate * (likelihood - self.knots[k])
                }
            }
        }
    }

    /// Draws the level variable given `ln Ω(L)`. Returns the level index
    /// whose segment holds the draw and the threshold itself.
    #[inline]
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        likelihood: f64,
        ln_omega_l: f64,
        k: usize,
        rng: &mut R,
    ) -> (usize, f64) {
        let u: f64 = rng.sample(rand::distr::OpenClosed01);
        match self.mode {
            WeightMode::Discrete => {
                // First t with Ω_t ≥ U Ω_k, i.e. ν_t ≤ ν_k / U.
                let target = self.nu[k] / u;
                let t = self.nu[..=k].partition_point(|&v| v > target).min(k);
                (t, self.knots[t])
            }
            WeightMode::Continuous => {
                let ln_u = u.ln() + ln_omega_l;
                if ln_u <= 0.0 {
                    return (0, 0.0);
                }
                let target = self.nu[0] / ln_u.exp();
                let upper = (k + 1).min(self.top());
                let t = self.nu[..=upper].partition_point(|&v| v > target).clamp(1, upper);
                let lo = self.ln_omega(t - 1);
                let hi = self.ln_omega(t);
                let (level, m) = if hi <= ln_u {
                    (t, self.knots[t])
                } else {
                    let rate = (hi - lo) / (self.knots[t] - self.knots[t - 1]);
                    let m = self.knots[t - 1] + (ln_u - lo) / rate;
                    (t - 1, m.clamp(self.knots[t - 1], self.knots[t]))
                };
                // Rounding must never leave the draw at or above L.
                if m < likelihood {
                    (level, m)
                } else {
                    (k, self.knots[k])
                }
            }
        }
    }

    /// Adds `inc` to `ν_t` for `t ≤ k`, from the top down, stopping once the
    /// increment is negligible against `ν_t`.
    #[inline]
    pub(crate) fn add(&mut self, inc: f64, k: usize, cutoff: f64) {
        for t in (0..=k).rev() {
            if inc < cutoff * self.nu[t] {
                break;
            }
            self.sums[t].add(inc);
            self.nu[t] = self.sums[t].value();
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.nu
    }
}

/// Runs the estimation phase on a fixed grid.
///
/// The visit masses start at `ν_t = ν_init Ẑ_t`. Each iteration moves `x`
/// at the current threshold, draws a new level from `ω` on `[0, L)`, and
/// adds `Ω(L)^{-1}` to every `ν_t` with `m_t < L`; the weights always equal
/// `Ω_t = ν_0 / ν_t = 1 / Ẑ_t`.
pub fn run_estimation<M, R>(
    model: &M,
    levels: LevelConstruction<M::Point>,
    cfg: &SplitConfig,
    rng: &mut R,
) -> Result<SplitResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let LevelConstruction {
        grid,
        mut state,
        iterations: construction_iterations,
        ..
    } = levels;
    grid.validate()?;
    let top = grid.top();
    let m_top = grid.threshold(top);
    let initial: Vec<f64> = grid.z_hat().iter().map(|z| cfg.nu_init * z).collect();
    let mut w = NuWeights::new(grid.thresholds().to_vec(), &initial, cfg.weight_mode);

    let mut visits = alloc::vec![0u64; top + 1];
    let mut trace = Vec::new();
    let mut batch = (cfg.record_every > 0).then(SampleBatch::new);
    let mut mass = CompensatedSum::default();
    let mut mass_l = CompensatedSum::default();
    let mut tail_mass = CompensatedSum::default();
    let mut tail_excess = CompensatedSum::default();
    let mut gamma_mass = CompensatedSum::default();
    let gamma_above_top = cfg.gamma.filter(|&g| g > m_top);

    let k0 = highest_below(grid.thresholds(), state.likelihood).unwrap_or(0);
    let (_, mut threshold) = w.sample(state.likelihood, w.ln_eval(state.likelihood, k0), k0, rng);

    for i in 0..cfg.n {
        for _ in 0..cfg.thinning {
            model.constrained_step(&mut state, threshold, rng)?;
        }
        let l = state.likelihood;
        let k = highest_below(&w.knots, l).unwrap_or(0);
        let ln_omega_l = w.ln_eval(l, k);
        let (level, m) = w.sample(l, ln_omega_l, k, rng);
        threshold = m;
        visits[level] += 1;

        let inc = (-ln_omega_l).exp();
        w.add(inc, k, cfg.update_cutoff);
        mass.add(inc);
        mass_l.add(inc * l);
        if l > m_top {
            tail_mass.add(inc);
            tail_excess.add(inc * (l - m_top));
            if let Some(g) = gamma_above_top {
                if l > g {
                    gamma_mass.add(inc);
                }
            }
        }
        if cfg.trace_every > 0 && i % cfg.trace_every == 0 {
            trace.push(TracePoint {
                iteration: i,
                level,
                log_omega: w.ln_omega(level),
            });
        }
        if let Some(b) = batch.as_mut() {
            if i % cfg.record_every == 0 {
                b.push(l, threshold, ln_omega_l)?;
            }
        }
    }

    let nu = w.values().to_vec();
    let mut z_hat = Vec::with_capacity(nu.len());
    let mut running = 1.0f64;
    for v in &nu {
        running = running.min(v / nu[0]);
        z_hat.push(running);
    }
    z_hat[0] = 1.0;
    let log_omega = z_hat.iter().map(|z| -z.ln()).collect();
    let mut grid = grid;
    grid.set_estimates(z_hat, nu, log_omega);

    let z_top = grid.z_hat()[top];
    let tail = if tail_mass.value() > 0.0 {
        z_top * tail_excess.value() / tail_mass.value()
    } else {
        0.0
    };
    let integrated = integrate_level_estimates(&grid)? + tail;
    let estimate = match cfg.gamma {
        None => integrated,
        Some(_) if gamma_above_top.is_none() => z_top,
        Some(_) => {
            if tail_mass.value() > 0.0 {
                z_top * gamma_mass.value() / tail_mass.value()
            } else {
                0.0
            }
        }
    };
    Ok(SplitResult {
        grid,
        estimate,
        integrated,
        tail,
        weighted_mean: mass_l.value() / mass.value(),
        visits,
        trace,
        construction_iterations,
        estimation_iterations: cfg.n,
        batch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{build_cumulative, LevelGrid};

    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture(mode: WeightMode) -> (NuWeights, crate::weight::CumulativeWeight) {
        let knots = vec![0.0, 0.5, 1.25, 2.0, 4.0];
        let nu = [50.0, 20.0, 7.0, 6.0, 0.5];
        let w = NuWeights::new(knots.clone(), &nu, mode);
        let z: Vec<f64> = nu.iter().map(|v| v / nu[0]).collect();
        let grid = LevelGrid::self_balanced(knots, z).unwrap();
        (w, build_cumulative(&grid, mode).unwrap())
    }

    #[test]
    fn matches_weight_object_on_evaluation() {
        for mode in [WeightMode::Discrete, WeightMode::Continuous] {
            let (w, c) = fixture(mode);
            for l in [0.1, 0.5, 0.7, 1.9, 3.3, 10.0] {
                let k = highest_below(&w.knots, l).unwrap();
                assert!((w.ln_eval(l, k) - c.ln_eval(l)).abs() < 1e-12, "{mode:?} at {l}");
            }
        }
    }

    #[test]
    fn matches_weight_object_on_sampling() {
        let (w, c) = fixture(WeightMode::Discrete);
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = a.clone();
        for l in [0.3, 0.9, 1.5, 2.5, 5.0].into_iter().cycle().take(5000) {
            let k = highest_below(&w.knots, l).unwrap();
            let (t, m) = w.sample(l, w.ln_eval(l, k), k, &mut a);
            assert_eq!(t, c.sample_level_index(l, &mut b).unwrap());
            assert_eq!(m, w.knots[t]);
        }
        let (w, c) = fixture(WeightMode::Continuous);
        for l in [0.3, 0.9, 1.5, 2.5, 5.0].into_iter().cycle().take(5000) {
            let k = highest_below(&w.knots, l).unwrap();
            let (_, m) = w.sample(l, w.ln_eval(l, k), k, &mut a);
            let m2 = c.sample_level(l, &mut b);
            assert!((m - m2).abs() < 1e-9 * m.max(1.0), "{m} vs {m2} at {l}");
            assert!(m < l);
        }
    }

    #[test]
    fn cutoff_skips_negligible_increments() {
        let mut w = NuWeights::new(vec![0.0, 1.0, 2.0], &[1e20, 1.0, 0.5], WeightMode::Discrete);
        w.add(1.0, 2, 1e-16);
        assert_eq!(w.values(), &[1e20, 2.0, 1.5]);
        w.add(1.0, 2, 0.0);
        assert_eq!(w.values(), &[1e20 + 1.0, 3.0, 2.5]);
    }
}
