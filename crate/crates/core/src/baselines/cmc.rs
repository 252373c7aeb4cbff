use num_traits::Float;
use rand::Rng;

use crate::model::TargetModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CmcResult {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)` at the estimate.
    pub std_error: f64,
    pub hits: u64,
    pub n: u64,
}

/// Crude Monte Carlo `(1/n) Σ I(L(x_i) > γ)` over prior draws.
pub fn cmc_estimate<M, R>(model: &M, gamma: f64, n: u64, rng: &mut R) -> Result<CmcResult>
where
    M: TargetModel,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::Config("sample size must be positive"));
    }
    let mut hits = 0u64;
    for _ in 0..n {
        if model.sample_prior(rng).exceeds(gamma) {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    Ok(CmcResult {
        estimate: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        hits,
        n,
    })
}
