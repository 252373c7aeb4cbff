//! Split sampling for high-dimensional expectations, normalising constants
//! and rare-event probabilities.
//!
//! The expectation `Z = E_π[L(x)]` is written as the integral of the
//! super-level-set masses `Z(m) = P_π(L(x) > m)` over `m`. A joint Markov
//! chain on `(x, m)` with stationary density proportional to
//! `ω(m) I(L(x) > m) π(x)` yields Rao-Blackwellised estimates of every
//! `Z(m)` at once, and hence of `Z`.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature to route
//! floating point math through the platform library instead of `libm`.
//!
//! Modules:
//!
//! * [`model`] and [`models`]: the target-model contract and the benchmark
//!   models (shortest-path network, Gaussian spike-and-slab, analytic toys).
//! * [`weight`]: level grids and the piecewise-exponential cumulative weight.
//! * [`split`]: the split sampler itself, level construction, estimation and
//!   the weight adaptation rules.
//! * [`baselines`]: crude Monte Carlo, the conditional-probability product,
//!   cross-entropy, nested and diffuse nested sampling.
#![no_std]
#![allow(unused_imports)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod baselines;
mod error;
pub mod model;
pub mod models;
pub mod split;
pub mod stats;
pub mod weight;

pub use error::{Error, Result};
pub use model::{Sample, TargetModel};
pub use weight::{build_cumulative, CumulativeWeight, LevelGrid, WeightMode};
