//! Comparison estimators.

mod ce;
mod cmc;
mod cpp;
mod diffuse;
mod nested;

pub use ce::{ce_estimate, ce_importance_estimate, CeParams, CeResult, ImportanceEstimate};
pub use cmc::{cmc_estimate, CmcResult};
pub use cpp::{cpp_estimate, product_estimate, product_variance, CppResult};
pub use diffuse::{diffuse_nested_sampling, DiffuseConfig, DiffuseResult};
pub use nested::{nested_sampling, NestedConfig, NestedResult};
