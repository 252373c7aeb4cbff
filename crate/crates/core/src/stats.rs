//! Small numerical helpers shared by the estimators.

use num_traits::Float;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new(initial: f64) -> Self {
        Self {
            sum: initial,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new(0.0);
        s.extend(iter);
        s
    }
}

/// The `(1 - rho)`-quantile of `values`: the `⌈(1 - rho) n⌉`-th order
/// statistic, so that a fraction of roughly `rho` lies strictly above it.
///
/// Reorders `values`. Returns `None` for an empty slice.
pub fn upper_quantile(values: &mut [f64], rho: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let k = ((1.0 - rho) * n as f64).ceil() as usize;
    let idx = k.clamp(1, n) - 1;
    let (_, q, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    Some(*q)
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `(e^d - 1) / d`, continuous through `d = 0`.
#[inline]
pub fn expm1_ratio(d: f64) -> f64 {
    if d.abs() < 1e-300 {
        1.0
    } else {
        d.exp_m1() / d
    }
}

/// Index of the highest knot strictly below `value`, for ascending `knots`
/// starting at zero. Returns `None` when no knot lies below.
#[inline]
pub fn highest_below(knots: &[f64], value: f64) -> Option<usize> {
    knots.partition_point(|&k| k < value).checked_sub(1)
}
