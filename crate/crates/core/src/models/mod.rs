//! Benchmark models and small analytic toys.

mod mixture;
mod shortest_path;
mod toy;

pub use mixture::{mixture_likelihood, GaussianMixtureModel, LOG_EVIDENCE};
pub use shortest_path::{
    shortest_path_length, EdgeWeights, ShortestPathModel, BENCHMARK_SCALES, REFERENCE_TAIL,
};
pub use toy::{ExpToy, UniformToy};
