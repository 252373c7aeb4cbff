//! Level grids and the cumulative weight `Ω(m)`.
//!
//! A [`LevelGrid`] stores thresholds `m_t` with their current estimates
//! `Ẑ_t`, visit masses `ν_t` and log cumulative weights `ln Ω_t`. A
//! [`CumulativeWeight`] is the evaluable function built from a grid, either
//! the piecewise-exponential interpolant (continuous mode) or the step
//! function of point masses at the knots (discrete mode).

use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::Rng;

use crate::stats::highest_below;
use crate::{Error, Result};

/// How a grid is turned into a weight on the level variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WeightMode {
    /// Point masses `ω_t = Ω_t - Ω_{t-1}` at the knots; the level variable
    /// takes values in the grid.
    #[default]
    Discrete,
    /// Piecewise-exponential `Ω` with a point mass `Ω_0` at zero.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelGrid {
    thresholds: Vec<f64>,
    z_hat: Vec<f64>,
    visit_mass: Vec<f64>,
    log_omega: Vec<f64>,
}

impl Default for LevelGrid {
    fn default() -> Self {
        Self::root()
    }
}

impl LevelGrid {
    /// The single level `m_0 = 0` with `Ẑ_0 = Ω_0 = 1`.
    pub fn root() -> Self {
        Self {
            thresholds: alloc::vec![0.0],
            z_hat: alloc::vec![1.0],
            visit_mass: alloc::vec![0.0],
            log_omega: alloc::vec![0.0],
        }
    }

    /// Builds a grid from thresholds, level estimates and log weights,
    /// checking every invariant.
    pub fn from_parts(thresholds: Vec<f64>, z_hat: Vec<f64>, log_omega: Vec<f64>) -> Result<Self> {
        if thresholds.len() != z_hat.len() || thresholds.len() != log_omega.len() {
            return Err(Error::InvalidGrid("column lengths differ"));
        }
        let visit_mass = alloc::vec![0.0; thresholds.len()];
        let grid = Self {
            thresholds,
            z_hat,
            visit_mass,
            log_omega,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// A grid whose weights are the reciprocal level estimates.
    pub fn self_balanced(thresholds: Vec<f64>, z_hat: Vec<f64>) -> Result<Self> {
        let log_omega = z_hat.iter().map(|z| -z.ln()).collect();
        Self::from_parts(thresholds, z_hat, log_omega)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.thresholds;
        if m.is_empty() {
            return Err(Error::InvalidGrid("grid has no levels"));
        }
        if m[0] != 0.0 {
            return Err(Error::InvalidGrid("first threshold must be zero"));
        }
        if m.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid("thresholds must be strictly increasing"));
        }
        if self.z_hat[0] != 1.0 {
            return Err(Error::InvalidGrid("root level estimate must be one"));
        }
        if self.z_hat.iter().any(|z| !(*z > 0.0)) {
            return Err(Error::InvalidGrid("level estimates must be positive"));
        }
        if self.z_hat.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidGrid("level estimates must be nonincreasing"));
        }
        if self.log_omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("weights must be positive and finite"));
        }
        if self.log_omega.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("cumulative weights must be nondecreasing"));
        }
        Ok(())
    }

    /// Index `T` of the highest level.
    pub fn top(&self) -> usize {
        self.thresholds.len() - 1
    }

    /// Number of levels `T + 1`.
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn z_hat(&self) -> &[f64] {
        &self.z_hat
    }

    pub fn visit_mass(&self) -> &[f64] {
        &self.visit_mass
    }

    pub fn log_omega(&self) -> &[f64] {
        &self.log_omega
    }

    pub fn threshold(&self, t: usize) -> f64 {
        self.thresholds[t]
    }

    /// Appends level `T + 1`.
    pub fn push_level(&mut self, threshold: f64, z_hat: f64, log_omega: f64) -> Result<()> {
        let top = self.thresholds[self.top()];
        if !(threshold > top) || !threshold.is_finite() {
            return Err(Error::InvalidGrid("new threshold must exceed the current top"));
        }
        if !(z_hat > 0.0) || !log_omega.is_finite() {
            return Err(Error::InvalidGrid("new level needs a positive estimate and weight"));
        }
        self.thresholds.push(threshold);
        self.z_hat.push(z_hat);
        self.visit_mass.push(0.0);
        self.log_omega.push(log_omega);
        Ok(())
    }

    pub fn set_log_omega(&mut self, t: usize, log_omega: f64) {
        self.log_omega[t] = log_omega;
    }

    pub fn set_z_hat(&mut self, t: usize, z_hat: f64) {
        self.z_hat[t] = z_hat;
    }

    pub(crate) fn set_estimates(&mut self, z_hat: Vec<f64>, visit_mass: Vec<f64>, log_omega: Vec<f64>) {
        debug_assert_eq!(z_hat.len(), self.thresholds.len());
        self.z_hat = z_hat;
        self.visit_mass = visit_mass;
        self.log_omega = log_omega;
    }

    /// Sets every `Ω_t = 1 / Ẑ_t`.
    pub fn rebalance_to_estimates(&mut self) {
        for (w, z) in self.log_omega.iter_mut().zip(&self.z_hat) {
            *w = -z.ln();
        }
    }

    /// Index of the highest level strictly below `likelihood`, if any.
    pub fn level_below(&self, likelihood: f64) -> Option<usize> {
        highest_below(&self.thresholds, likelihood)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `ω ≡ 1`, so `Ω(m) = m`.
    Uniform,
    /// `ω(m) = κ e^{κ m}` on `[0, M]`, so `Ω(m) = e^{κ (m ∧ M)} - 1`.
    Exponential { rate: f64, cap: f64 },
    Piecewise {
        knots: Vec<f64>,
        log_omega: Vec<f64>,
        /// `rates[t]` is the log-slope of the segment ending at knot `t`;
        /// `rates[0]` is unused.
        rates: Vec<f64>,
        mode: WeightMode,
    },
}

/// The cumulative weight `Ω(m) = ∫_0^m ω(s) ds`, with any point mass at
/// zero included.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeWeight {
    shape: Shape,
}

/// Builds the weight interpolating `(m_t, Ω_t)` from `grid`.
pub fn build_cumulative(grid: &LevelGrid, mode: WeightMode) -> Result<CumulativeWeight> {
    CumulativeWeight::piecewise(grid.thresholds.clone(), grid.log_omega.clone(), mode)
}

impl CumulativeWeight {
    /// The slice-sampling weight `ω ≡ 1`.
    pub fn uniform() -> Self {
        Self {
            shape: Shape::Uniform,
        }
    }

    /// `ω(m) = κ e^{κ m}` truncated at `cap`.
    pub fn exponential(rate: f64, cap: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || !(cap > 0.0) {
            return Err(Error::Config("exponential weight needs positive rate and cap"));
        }
        Ok(Self {
            shape: Shape::Exponential { rate, cap },
        })
    }

    /// Piecewise weight through knots `(m_t, ln Ω_t)`.
    pub fn piecewise(knots: Vec<f64>, log_omega: Vec<f64>, mode: WeightMode) -> Result<Self> {
        if knots.is_empty() || knots.len() != log_omega.len() {
            return Err(Error::InvalidGrid("knot columns must be nonempty and equal length"));
        }
        if knots[0] != 0.0 {
            return Err(Error::InvalidGrid("first knot must be zero"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("knots must be strictly increasing"));
        }
        if log_omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("weights must be positive and finite"));
        }
        if log_omega.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("cumulative weights must be nondecreasing"));
        }
        let mut rates = alloc::vec![0.0; knots.len()];
        for t in 1..knots.len() {
            rates[t] = (log_omega[t] - log_omega[t - 1]) / (knots[t] - knots[t - 1]);
        }
        Ok(Self {
            shape: Shape::Piecewise {
                knots,
                log_omega,
                rates,
                mode,
            },
        })
    }

    pub fn mode(&self) -> Option<WeightMode> {
        match &self.shape {
            Shape::Piecewise { mode, .. } => Some(*mode),
            _ => None,
        }
    }

    /// Segment log-slopes `κ_t` for a piecewise weight (`κ_0 = 0`).
    pub fn rates(&self) -> &[f64] {
        match &self.shape {
            Shape::Piecewise { rates, .. } => rates,
            _ => &[],
        }
    }

    /// `ln Ω(m)`.
    pub fn ln_eval(&self, m: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => m.max(0.0).ln(),
            Shape::Exponential { rate, cap } => (rate * m.clamp(0.0, *cap)).exp_m1().ln(),
            Shape::Piecewise {
                knots,
                log_omega,
                rates,
                mode,
            } => match highest_below(knots, m) {
                None => log_omega[0],
                Some(k) => match mode {
                    WeightMode::Discrete => log_omega[k],
                    WeightMode::Continuous => {
                        if k + 1 == knots.len() {
                            log_omega[k]
                        } else if m >= knots[k + 1] {
                            log_omega[k + 1]
                        } else {
                            log_omega[k] + rates[k + 1] * (m - knots[k])
                        }
                    }
                },
            },
        }
    }

    /// `Ω(m)`.
    ///
    /// In discrete mode this is the left-continuous step `Σ_{m_t < m} ω_t`,
    /// the weight of the levels admissible for a point with likelihood `m`.
    pub fn eval(&self, m: f64) -> f64 {
        self.ln_eval(m).exp()
    }

    /// Largest attainable value `ln Ω(∞)`.
    pub fn ln_sup(&self) -> f64 {
        match &self.shape {
            Shape::Uniform => f64::INFINITY,
            Shape::Exponential { rate, cap } => (rate * cap).exp_m1().ln(),
            Shape::Piecewise { log_omega, .. } => log_omega[log_omega.len() - 1],
        }
    }

    /// Solves `ln Ω(m) = ln_u` for `m`.
    ///
    /// Returns zero when `ln_u` is at or below the point mass at zero and
    /// the left endpoint on a flat stretch.
    pub fn ln_invert(&self, ln_u: f64) -> Result<f64> {
        let sup = self.ln_sup();
        if ln_u > sup + 1e-12 * sup.abs().max(1.0) {
            return Err(Error::OutOfRange {
                value: ln_u,
                max: sup,
            });
        }
        Ok(match &self.shape {
            Shape::Uniform => ln_u.exp(),
            Shape::Exponential { rate, cap } => (ln_u.exp().ln_1p() / rate).min(*cap),
            Shape::Piecewise {
                knots,
                log_omega,
                rates,
                mode,
            } => {
                if ln_u <= log_omega[0] {
                    return Ok(0.0);
                }
                let t = log_omega.partition_point(|&w| w < ln_u).min(knots.len() - 1);
                match mode {
                    WeightMode::Discrete => knots[t],
                    WeightMode::Continuous => {
                        if log_omega[t] <= ln_u {
                            knots[t]
                        } else {
                            let m = knots[t - 1] + (ln_u - log_omega[t - 1]) / rates[t];
                            m.clamp(knots[t - 1], knots[t])
                        }
                    }
                }
            }
        })
    }

    /// Solves `Ω(m) = u` for `m`.
    pub fn invert(&self, u: f64) -> Result<f64> {
        self.ln_invert(u.ln())
    }

    /// Draws the level variable from `ω` restricted to `[0, likelihood)`.
    ///
    /// Draws `U ~ U(0, Ω(likelihood))` and returns `Ω^{-1}(U)`, so the point
    /// mass at zero is hit when `U ≤ Ω(0)`. In discrete mode the result is
    /// one of the knots.
    pub fn sample_level<R: Rng + ?Sized>(&self, likelihood: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(rand::distr::OpenClosed01);
        let ln_u = u.ln() + self.ln_eval(likelihood);
        match &self.shape {
            // Ω^{-1}(U) = U·L for the uniform weight.
            Shape::Uniform => u * likelihood,
            Shape::Exponential { .. } => self
                .ln_invert(ln_u)
                .expect("a fraction of an attained value is in range"),
            Shape::Piecewise { knots, .. } => {
                let m = self
                    .ln_invert(ln_u)
                    .expect("a fraction of an attained value is in range");
                // Rounding must never leave the draw at or above L.
                if m < likelihood {
                    m
                } else {
                    highest_below(knots, likelihood).map_or(0.0, |k| knots[k])
                }
            }
        }
    }

    /// Discrete mode: draws a level index with probability `∝ ω_t` over
    /// `{t : m_t < likelihood}`.
    pub fn sample_level_index<R: Rng + ?Sized>(&self, likelihood: f64, rng: &mut R) -> Result<usize> {
        let Shape::Piecewise {
            knots, log_omega, ..
        } = &self.shape
        else {
            return Err(Error::Config("level indices need a piecewise weight"));
        };
        let Some(k) = highest_below(knots, likelihood) else {
            return Err(Error::Domain("likelihood must exceed the root threshold"));
        };
        let u: f64 = rng.sample(rand::distr::OpenClosed01);
        let ln_u = u.ln() + log_omega[k];
        Ok(log_omega[..=k].partition_point(|&w| w < ln_u).min(k))
    }

    /// Density `ω(m)` of the absolutely continuous part.
    pub fn density(&self, m: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Exponential { rate, cap } => {
                if (0.0..*cap).contains(&m) {
                    rate * (rate * m).exp()
                } else {
                    0.0
                }
            }
            Shape::Piecewise { knots, rates, .. } => match highest_below(knots, m) {
                Some(k) if k + 1 < knots.len() => rates[k + 1] * self.eval(m),
                _ => 0.0,
            },
        }
    }

    /// Point masses `ω_0 = Ω_0` and `ω_t = Ω_t - Ω_{t-1}` at the knots.
    pub fn jumps(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Piecewise { log_omega, .. } => {
                let mut out = Vec::with_capacity(log_omega.len());
                let mut prev = 0.0;
                for w in log_omega {
                    let v = w.exp();
                    out.push(v - prev);
                    prev = v;
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Knots as `(m_t, ln Ω_t)` pairs.
    pub fn table(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Piecewise {
                knots, log_omega, ..
            } => knots.iter().copied().zip(log_omega.iter().copied()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Two-column plain-text table of `m_t` and `ln Ω_t`.
impl fmt::Display for CumulativeWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m\tlog_omega")?;
        for (m, w) in self.table() {
            writeln!(f, "{m:e}\t{w:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::E;

    fn two_knot() -> CumulativeWeight {
        CumulativeWeight::piecewise(vec![0.0, 1.0], vec![0.0, 1.0], WeightMode::Continuous).unwrap()
    }

    #[test]
    fn interpolates_between_knots() {
        let w = two_knot();
        assert_eq!(w.rates()[1], 1.0);
        assert!((w.eval(0.5) - 0.5f64.exp()).abs() < 1e-15);
        assert!((w.eval(1.0) - E).abs() < 1e-15);
        assert!((w.eval(7.0) - E).abs() < 1e-15);
        assert_eq!(w.eval(0.0), 1.0);
    }

    #[test]
    fn inverse_of_interpolant() {
        let w = two_knot();
        assert!((w.invert(0.5f64.exp()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(w.invert(1.0).unwrap(), 0.0);
        assert_eq!(w.invert(0.5).unwrap(), 0.0);
        assert!(matches!(w.invert(3.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn root_only_weight_is_constant() {
        let w = build_cumulative(&LevelGrid::root(), WeightMode::Continuous).unwrap();
        for m in [0.0, 0.3, 10.0, 1e9] {
            assert_eq!(w.eval(m), 1.0);
        }
    }

    #[test]
    fn geometric_knots_give_single_exponential() {
        let rho = (-1f64).exp();
        let m: Vec<f64> = (0..=10).map(|t| t as f64).collect();
        let z: Vec<f64> = (0..=10).map(|t| rho.powi(t)).collect();
        let grid = LevelGrid::self_balanced(m, z).unwrap();
        let w = build_cumulative(&grid, WeightMode::Continuous).unwrap();
        for &k in &w.rates()[1..] {
            assert!((k - 1.0).abs() < 1e-14);
        }
        for m in [0.25, 3.7, 9.99] {
            assert!((w.eval(m) / m.exp() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_segment_inverts_to_left_endpoint() {
        let w = CumulativeWeight::piecewise(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0, 1.0, 2.0],
            WeightMode::Continuous,
        )
        .unwrap();
        assert_eq!(w.rates()[2], 0.0);
        assert_eq!(w.ln_invert(1.0).unwrap(), 1.0);
        assert!((w.ln_invert(1.5).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_and_exponential_shapes() {
        let w = CumulativeWeight::uniform();
        assert_eq!(w.eval(0.7), 0.7);
        let w = CumulativeWeight::exponential(2.0, 1.5).unwrap();
        assert!((w.eval(1.0) - 1f64.exp_m1() * (1.0 + E)).abs() < 1e-13);
        assert!((w.eval(4.0) - 3f64.exp_m1()).abs() < 1e-12);
        assert!((w.invert(w.eval(0.8)).unwrap() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn discrete_step_function() {
        let w = CumulativeWeight::piecewise(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 2f64.ln(), 3f64.ln()],
            WeightMode::Discrete,
        )
        .unwrap();
        assert_eq!(w.eval(0.5), 1.0);
        assert!((w.eval(1.5) - 2.0).abs() < 1e-15);
        assert!((w.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((w.eval(9.0) - 3.0).abs() < 1e-15);
        let j = w.jumps();
        assert!((j[0] - 1.0).abs() < 1e-15 && (j[1] - 1.0).abs() < 1e-15 && (j[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_grids() {
        assert!(CumulativeWeight::piecewise(vec![0.0, 1.0, 1.0], vec![0.0; 3], WeightMode::Discrete).is_err());
        assert!(CumulativeWeight::piecewise(vec![0.0, 1.0], vec![1.0, 0.0], WeightMode::Discrete).is_err());
        assert!(LevelGrid::from_parts(vec![0.0, 1.0], vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        let mut g = LevelGrid::root();
        assert!(g.push_level(0.0, 0.5, 1.0).is_err());
        assert!(g.push_level(1.0, 0.5, 1.0).is_ok());
        assert_eq!(g.top(), 1);
    }

    #[test]
    fn table_output() {
        let s = alloc::format!("{}", two_knot());
        assert!(s.starts_with("m\tlog_omega\n"));
        assert_eq!(s.lines().count(), 3);
    }
}
