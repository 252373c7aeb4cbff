use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitsample_harness::config::RawConfig;
use splitsample_harness::report::{write_levels, write_trace};
use splitsample_harness::{
    emit_reports, run_replicates, run_trace, suite, ExperimentKind, HarnessError, ModelKind, OutputFormat, Result,
    SummaryTable,
};

/// Split sampling benchmark experiments.
#[derive(Parser)]
#[command(name = "splitsample", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated tail-probability experiments on the shortest-path network.
    RareEvent(Common),
    /// Replicated evidence experiments on the Gaussian mixtures.
    Evidence(Common),
    /// Deterministic identity and sampler checks.
    PropertySuite {
        /// Print results as JSON instead of PASS/FAIL lines.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// One split-sampling chain with its level-visit trace.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Experiment kind of the chain; inferred from the model when absent.
        #[arg(long)]
        kind: Option<String>,
        /// Also write the final level grid to this file.
        #[arg(long)]
        levels: Option<PathBuf>,
    },
}

/// Every flag overrides the matching key of the configuration file and
/// takes the same syntax, including comma-separated lists.
#[derive(Args)]
struct Common {
    /// Experiment file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// shortest-path, centered or decentered.
    #[arg(long)]
    model: Option<String>,
    /// cmc, cpp, ce, ss, ns or dns.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Budget; see the README for its meaning per estimator.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    n_level: Option<String>,
    #[arg(long)]
    nu_init: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    /// Nested-sampling live points.
    #[arg(long)]
    particles: Option<String>,
    /// Nested-sampling kernel applications per replacement.
    #[arg(long)]
    mcmc_steps: Option<String>,
    /// Cross-entropy pilot size per stage.
    #[arg(long)]
    ce_pilot: Option<String>,
    /// Diffuse nested sampling backtracking slope.
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    trace_every: Option<String>,
    /// Per-replicate report (or trace) destination.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Record wall-clock seconds per replicate.
    #[arg(long)]
    timings: bool,
    /// Also write the summary table to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl Common {
    fn raw(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::parse(&fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                source: e,
            })?)?,
            None => RawConfig::default(),
        };
        let flags = [
            ("model", &self.model),
            ("estimator", &self.estimator),
            ("gamma", &self.gamma),
            ("n", &self.n),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("rho", &self.rho),
            ("n_level", &self.n_level),
            ("nu_init", &self.nu_init),
            ("lambda", &self.lambda),
            ("t_max", &self.t_max),
            ("particles", &self.particles),
            ("mcmc_steps", &self.mcmc_steps),
            ("ce_pilot", &self.ce_pilot),
            ("kappa", &self.kappa),
            ("threads", &self.threads),
            ("trace_every", &self.trace_every),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        if self.timings {
            raw.set("timings", "true")?;
        }
        Ok(raw)
    }
}

fn write_to(path: Option<&PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).map_err(|e| HarnessError::Io {
                path: p.clone(),
                source: e,
            })?);
            write(&mut f)?;
            f.flush().map_err(|e| HarnessError::Io { path: p.clone(), source: e })
        }
        None => write(&mut io::stdout().lock()),
    }
}

fn experiments(common: &Common, kind: ExperimentKind) -> Result<()> {
    let cells = common.raw()?.expand(kind)?;
    let mut reports = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        eprintln!(
            "[{}/{}] {} on {} ({}), N = {}, R = {}",
            i + 1,
            cells.len(),
            cell.estimator_label(),
            cell.model,
            cell.gamma_or_mode(),
            cell.n,
            cell.replicates
        );
        let report = run_replicates(cell)?;
        if report.failures() > 0 {
            eprintln!("  {} replicate(s) failed", report.failures());
        }
        reports.push(report);
    }
    if let Some(out) = &cells[0].out {
        emit_reports(&reports, cells[0].format, out)?;
    }
    let table = SummaryTable::from_reports(&reports);
    if let Some(path) = &common.summary {
        write_to(Some(path), |w| table.write_csv(w))?;
    }
    write_to(None, |w| table.write_csv(w))
}

fn trace(common: &Common, kind: Option<&str>, levels: Option<&PathBuf>) -> Result<()> {
    let raw = common.raw()?;
    let kind = match kind {
        Some(k) => k.parse().map_err(HarnessError::Config)?,
        None => match raw.kind()? {
            Some(k) => k,
            None => {
                let model: Option<ModelKind> = match raw.get("model") {
                    Some(m) => Some(m[0].parse().map_err(HarnessError::Config)?),
                    None => None,
                };
                match model {
                    Some(ModelKind::Centered | ModelKind::Decentered) => ExperimentKind::Evidence,
                    _ => ExperimentKind::RareEvent,
                }
            }
        },
    };
    let cells = raw.expand(kind)?;
    if cells.len() != 1 {
        return Err(HarnessError::Config("a trace needs a single experiment cell".to_string()));
    }
    let res = run_trace(&cells[0])?;
    eprintln!("estimate {:e} with {} levels", res.estimate, res.grid.top());
    if let Some(path) = levels {
        write_to(Some(path), |w| write_levels(&res, w))?;
    }
    write_to(cells[0].out.as_ref(), |w| write_trace(&res, w))
}

fn property_suite(format: &str) -> Result<bool> {
    let format: OutputFormat = format.parse().map_err(HarnessError::Config)?;
    let checks = suite::property_suite();
    let passed = checks.iter().all(|c| c.passed);
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&checks)?),
        OutputFormat::Csv => {
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
        }
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::RareEvent(c) => experiments(c, ExperimentKind::RareEvent).map(|_| true),
        Command::Evidence(c) => experiments(c, ExperimentKind::Evidence).map(|_| true),
        Command::PropertySuite { format } => property_suite(format),
        Command::Trace { common, kind, levels } => trace(common, kind.as_deref(), levels.as_ref()).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
