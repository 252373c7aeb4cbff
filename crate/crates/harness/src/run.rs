//! Replicated runs of a single experiment cell.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use splitsample::baselines::{ce_estimate, cmc_estimate, cpp_estimate, diffuse_nested_sampling, nested_sampling};
use splitsample::models::{GaussianMixtureModel, ShortestPathModel};
use splitsample::split::{split_sample, SplitResult};
use splitsample::TargetModel;

use crate::config::{EstimatorKind, ExperimentConfig, ExperimentKind, ModelKind, CPP_PILOT};
use crate::error::{HarnessError, Result};
use crate::report::{ReplicateRecord, ReplicateReport};

/// What a single successful replicate produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub estimate: f64,
    /// Prior draws plus kernel applications.
    pub evaluations: u64,
    /// Levels, stages or ladder length, where the estimator has them.
    pub levels: Option<usize>,
}

/// The random stream of replicate `r`.
pub fn replicate_rng(base_seed: u64, r: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(r))
}

fn split_outcome(res: &SplitResult) -> Outcome {
    Outcome {
        estimate: res.estimate,
        evaluations: res.construction_iterations + res.estimation_iterations,
        levels: Some(res.grid.top()),
    }
}

fn run_generic<M: TargetModel>(model: &M, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> splitsample::Result<Outcome> {
    match cfg.estimator {
        EstimatorKind::Cmc => {
            let gamma = cfg.gamma.unwrap_or(0.0);
            let res = cmc_estimate(model, gamma, cfg.n, rng)?;
            Ok(Outcome {
                estimate: res.estimate,
                evaluations: res.n,
                levels: None,
            })
        }
        EstimatorKind::Cpp => {
            let gamma = cfg.gamma.unwrap_or(0.0);
            let rho = cfg.cpp_rho();
            let pilot = cpp_estimate(model, gamma, rho, CPP_PILOT, rng)?;
            let n0 = cfg.n.saturating_sub(pilot.evaluations) / pilot.stages as u64;
            if n0 < 2 {
                return Err(splitsample::Error::Config("budget too small for the product estimator stages"));
            }
            let res = cpp_estimate(model, gamma, rho, n0 as usize, rng)?;
            Ok(Outcome {
                estimate: res.estimate,
                evaluations: pilot.evaluations + res.evaluations,
                levels: Some(res.stages),
            })
        }
        EstimatorKind::Ss => split_sample(model, &cfg.split_config(), rng).map(|r| split_outcome(&r)),
        EstimatorKind::Ns => {
            let res = nested_sampling(model, &cfg.nested_config(), rng)?;
            Ok(Outcome {
                estimate: res.estimate,
                evaluations: cfg.particles as u64 + res.replacements * cfg.mcmc_steps as u64,
                levels: None,
            })
        }
        EstimatorKind::Dns => {
            let dc = cfg.diffuse_config();
            let res = diffuse_nested_sampling(model, &dc, rng)?;
            Ok(Outcome {
                estimate: res.estimate,
                evaluations: res.creation_iterations + dc.chain_length,
                levels: Some(res.levels.len()),
            })
        }
        EstimatorKind::Ce => Err(splitsample::Error::Config("cross-entropy requires the shortest-path model")),
    }
}

/// Runs one replicate of `cfg` on the given stream.
pub fn run_once(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> splitsample::Result<Outcome> {
    match cfg.model {
        ModelKind::ShortestPath => {
            let model = ShortestPathModel::default();
            if cfg.estimator == EstimatorKind::Ce {
                let res = ce_estimate(&model, &cfg.ce_params(), rng)?;
                return Ok(Outcome {
                    estimate: res.estimate,
                    evaluations: cfg.n,
                    levels: Some(res.stages),
                });
            }
            run_generic(&model, cfg, rng)
        }
        ModelKind::Centered => run_generic(&GaussianMixtureModel::centered(), cfg, rng),
        ModelKind::Decentered => run_generic(&GaussianMixtureModel::decentered(), cfg, rng),
    }
}

fn record(cfg: &ExperimentConfig, r: u64) -> ReplicateRecord {
    let start = Instant::now();
    let mut rng = replicate_rng(cfg.seed, r);
    let outcome = run_once(cfg, &mut rng);
    let seconds = cfg.timings.then(|| start.elapsed().as_secs_f64());
    match outcome {
        Ok(o) => ReplicateRecord {
            replicate: r,
            seed: cfg.seed.wrapping_add(r),
            estimate: Some(o.estimate),
            error: None,
            evaluations: Some(o.evaluations),
            levels: o.levels,
            seconds,
        },
        Err(e) => ReplicateRecord {
            replicate: r,
            seed: cfg.seed.wrapping_add(r),
            estimate: None,
            error: Some(e.to_string()),
            evaluations: None,
            levels: None,
            seconds,
        },
    }
}

/// Runs `cfg.replicates` independent replicates with seeds
/// `cfg.seed + r`.
///
/// Replicates are spread over a work-stealing pool (of `cfg.threads`
/// workers when set) and merged in replicate order, so the report does not
/// depend on the number of threads. An estimator failure is stored in its
/// replicate's record.
pub fn run_replicates(cfg: &ExperimentConfig) -> Result<ReplicateReport> {
    cfg.validate()?;
    if cfg.kind == ExperimentKind::PropertySuite {
        return Err(HarnessError::Config("property-suite runs have no replicates".to_string()));
    }
    let work = || (0..cfg.replicates).into_par_iter().map(|r| record(cfg, r)).collect::<Vec<_>>();
    let records = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(work),
        None => work(),
    };
    Ok(ReplicateReport::new(cfg, records))
}

/// Runs a list of cells one after another.
pub fn run_plan(cells: &[ExperimentConfig]) -> Result<Vec<ReplicateReport>> {
    cells.iter().map(run_replicates).collect()
}

/// A single split-sampling chain with its level-visit trace.
pub fn run_trace(cfg: &ExperimentConfig) -> Result<SplitResult> {
    cfg.validate()?;
    if cfg.estimator != EstimatorKind::Ss {
        return Err(HarnessError::Config("traces are produced by the split sampler (estimator = ss)".to_string()));
    }
    let split = splitsample::split::SplitConfig {
        trace_every: cfg.trace_every,
        ..cfg.split_config()
    };
    let mut rng = replicate_rng(cfg.seed, 0);
    let res = match cfg.model {
        ModelKind::ShortestPath => split_sample(&ShortestPathModel::default(), &split, &mut rng),
        ModelKind::Centered => split_sample(&GaussianMixtureModel::centered(), &split, &mut rng),
        ModelKind::Decentered => split_sample(&GaussianMixtureModel::decentered(), &split, &mut rng),
    }?;
    Ok(res)
}
