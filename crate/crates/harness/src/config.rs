//! Experiment configuration.
//!
//! A configuration is a flat `key = value` text file; `#` starts a comment.
//! A value may be a comma-separated list for `model`, `estimator`, `gamma`
//! and `n`, in which case the file describes the full cross product of
//! those settings. `particles` and `mcmc_steps` may also be lists of equal
//! length; they are paired element by element and only multiply the
//! nested-sampling cells. Command-line flags override file entries using
//! the same keys and value syntax.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use splitsample::baselines::{CeParams, DiffuseConfig, NestedConfig};
use splitsample::models::{LOG_EVIDENCE, REFERENCE_TAIL};
use splitsample::split::SplitConfig;

use crate::error::{HarnessError, Result};

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($label $(| $alias)* => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name),
                        [$($label),+].join(", ")
                    )),
                }
            }
        }
    };
}

named_enum!(
    ExperimentKind {
        RareEvent => "rare-event",
        Evidence => "evidence",
        PropertySuite => "property-suite",
    }
);

named_enum!(
    ModelKind {
        ShortestPath => "shortest-path",
        Centered => "centered" | "mixture-centered",
        Decentered => "decentered" | "mixture-decentered" | "de-centered",
    }
);

named_enum!(
    EstimatorKind {
        Cmc => "cmc",
        Cpp => "cpp",
        Ce => "ce",
        Ss => "ss",
        Ns => "ns",
        Dns => "dns",
    }
);

named_enum!(
    OutputFormat {
        Csv => "csv",
        Json => "json",
    }
);

/// One cell of an experiment: a single estimator on a single model with a
/// fixed budget, replicated `replicates` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelKind,
    pub estimator: EstimatorKind,
    /// Rare-event threshold.
    pub gamma: Option<f64>,
    /// Budget: draws for CMC and CE, kernel applications for CPP,
    /// estimation iterations for SS and chain length for DNS. Nested
    /// sampling is sized by `particles` and `mcmc_steps` instead.
    pub n: u64,
    pub replicates: u64,
    pub seed: u64,
    pub rho: Option<f64>,
    pub n_level: Option<u64>,
    pub nu_init: Option<f64>,
    pub lambda: Option<f64>,
    pub t_max: Option<usize>,
    pub particles: usize,
    pub mcmc_steps: usize,
    /// Pilot size `N_0` of each cross-entropy stage.
    pub ce_pilot: Option<usize>,
    /// Backtracking slope of diffuse nested sampling.
    pub kappa: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Record wall-clock seconds per replicate. Off by default so that
    /// reports are byte-for-byte reproducible.
    pub timings: bool,
    /// Trace sampling interval for the `trace` command.
    pub trace_every: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Prior draws per stage of the pilot run that fixes the number of
/// product-estimator stages.
pub const CPP_PILOT: usize = 1_000;

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let evidence = kind == ExperimentKind::Evidence;
        Self {
            kind,
            model: if evidence {
                ModelKind::Centered
            } else {
                ModelKind::ShortestPath
            },
            estimator: EstimatorKind::Ss,
            gamma: (!evidence).then_some(2.0),
            n: if evidence { 10_000_000 } else { 1_000_000 },
            replicates: if evidence { 50 } else { 100 },
            seed: 1,
            rho: None,
            n_level: None,
            nu_init: None,
            lambda: None,
            t_max: None,
            particles: 1000,
            mcmc_steps: 100,
            ce_pilot: None,
            kappa: None,
            threads: None,
            timings: false,
            trace_every: 100,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    /// Checks counts, ranges and estimator compatibility.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.n == 0 || self.replicates == 0 {
            return fail("n and replicates must be positive");
        }
        if self.particles < 2 || self.mcmc_steps == 0 {
            return fail("nested sampling needs at least two particles and one MCMC step");
        }
        if self.trace_every == 0 {
            return fail("trace_every must be positive");
        }
        if self.threads == Some(0) {
            return fail("threads must be positive");
        }
        if let Some(r) = self.rho {
            if !(r > 0.0 && r < 1.0) {
                return fail("rho must lie in (0, 1)");
            }
        }
        for (name, v) in [("nu_init", self.nu_init), ("lambda", self.lambda), ("kappa", self.kappa)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) || (name == "nu_init" && v == 0.0) {
                    return fail(&format!("{name} must be a positive finite number"));
                }
            }
        }
        if self.n_level == Some(0) || self.t_max == Some(0) || self.ce_pilot == Some(0) {
            return fail("n_level, t_max and ce_pilot must be positive");
        }
        match self.kind {
            ExperimentKind::PropertySuite => return Ok(()),
            ExperimentKind::RareEvent => {
                match self.gamma {
                    Some(g) if g > 0.0 && g.is_finite() => {}
                    _ => return fail("rare-event experiments need a positive gamma"),
                }
                if matches!(self.estimator, EstimatorKind::Ns | EstimatorKind::Dns) {
                    return fail("nested samplers estimate evidence, not tail probabilities");
                }
            }
            ExperimentKind::Evidence => {
                if matches!(self.estimator, EstimatorKind::Cmc | EstimatorKind::Cpp | EstimatorKind::Ce) {
                    return fail("evidence experiments use ss, ns or dns");
                }
                if self.gamma.is_some() {
                    return fail("gamma is only meaningful for rare-event experiments");
                }
            }
        }
        if self.estimator == EstimatorKind::Ce {
            if self.model != ModelKind::ShortestPath {
                return fail("cross-entropy requires the shortest-path model");
            }
            if self.ce_pilot_size() as u64 >= self.n {
                return fail("cross-entropy pilot size must be below the total budget");
            }
        }
        if self.estimator == EstimatorKind::Cpp && self.n < 2 * CPP_PILOT as u64 {
            return fail("the product estimator needs a budget of at least twice its pilot size");
        }
        if self.estimator == EstimatorKind::Ss {
            self.split_config().validate()?;
        }
        Ok(())
    }

    /// `N_0` for cross-entropy: `10^3` up to `γ = 2` and `10^4` beyond.
    pub fn ce_pilot_size(&self) -> usize {
        self.ce_pilot
            .unwrap_or(if self.gamma.unwrap_or(0.0) <= 2.0 { 1_000 } else { 10_000 })
    }

    pub fn split_config(&self) -> SplitConfig {
        let mut cfg = match self.gamma {
            Some(g) if self.kind == ExperimentKind::RareEvent => SplitConfig::rare_event(g, self.n),
            _ => SplitConfig::evidence(self.n),
        };
        if let Some(r) = self.rho {
            cfg.rho = r;
        }
        if let Some(v) = self.n_level {
            cfg.n_level = v;
        }
        if let Some(v) = self.nu_init {
            cfg.nu_init = v;
        }
        if let Some(v) = self.lambda {
            cfg.boost = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        cfg
    }

    pub fn ce_params(&self) -> CeParams {
        let mut p = CeParams::new(self.gamma.unwrap_or(0.0), self.ce_pilot_size(), self.n as usize);
        if let Some(r) = self.rho {
            p.rho = r;
        }
        p
    }

    pub fn cpp_rho(&self) -> f64 {
        self.rho.unwrap_or((-1f64).exp())
    }

    pub fn nested_config(&self) -> NestedConfig {
        NestedConfig::new(self.particles, self.mcmc_steps)
    }

    pub fn diffuse_config(&self) -> DiffuseConfig {
        let mut cfg = DiffuseConfig {
            chain_length: self.n,
            ..DiffuseConfig::default()
        };
        if let Some(r) = self.rho {
            cfg.rho = r;
        }
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        cfg
    }

    /// The true value being estimated, when known: the reference tail
    /// probabilities for `γ ∈ {2, 3, 4}` and `Z = 101` for both mixtures.
    pub fn truth(&self) -> Option<f64> {
        match (self.kind, self.model) {
            (ExperimentKind::RareEvent, ModelKind::ShortestPath) => {
                let g = self.gamma?;
                REFERENCE_TAIL.iter().find(|(rg, _)| *rg == g).map(|(_, z)| *z)
            }
            (ExperimentKind::Evidence, ModelKind::Centered | ModelKind::Decentered) => Some(LOG_EVIDENCE.exp()),
            _ => None,
        }
    }

    /// Estimator name with the nested-sampling settings appended.
    pub fn estimator_label(&self) -> String {
        match self.estimator {
            EstimatorKind::Ns => format!("ns({},{})", self.particles, self.mcmc_steps),
            e => e.to_string(),
        }
    }

    /// The threshold for rare events, `evidence` otherwise.
    pub fn gamma_or_mode(&self) -> String {
        match (self.kind, self.gamma) {
            (ExperimentKind::RareEvent, Some(g)) => g.to_string(),
            (k, _) => k.to_string(),
        }
    }
}

/// Parsed `key = value` entries, each a list of raw values with the line it
/// came from (zero for command-line overrides).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (Vec<String>, usize)>,
}

const LIST_KEYS: &[&str] = &["model", "estimator", "gamma", "n", "particles", "mcmc_steps"];
const KEYS: &[&str] = &[
    "kind",
    "model",
    "estimator",
    "gamma",
    "n",
    "replicates",
    "seed",
    "rho",
    "n_level",
    "nu_init",
    "lambda",
    "t_max",
    "particles",
    "mcmc_steps",
    "ce_pilot",
    "kappa",
    "threads",
    "timings",
    "trace_every",
    "out",
    "format",
];

fn normalise_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = normalise_key(key);
            if raw.entries.contains_key(&key) {
                return Err(HarnessError::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            raw.insert(&key, value, line_no)?;
        }
        Ok(raw)
    }

    /// Sets or replaces a key, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.insert(&normalise_key(key), value, 0)
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(&normalise_key(key)).map(|(v, _)| v.as_slice())
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(HarnessError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        let values: Vec<String> = if LIST_KEYS.contains(&key) {
            value.split(',').map(|v| v.trim().to_string()).collect()
        } else {
            vec![value.trim().to_string()]
        };
        if values.iter().any(String::is_empty) {
            return Err(HarnessError::Parse {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        self.entries.insert(key.to_string(), (values, line));
        Ok(())
    }

    fn scalar<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((values, line)) => parse(&values[0])
                .map(Some)
                .map_err(|message| HarnessError::Parse { line: *line, message: format!("{key}: {message}") }),
        }
    }

    fn list<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((values, line)) => values
                .iter()
                .map(|v| parse(v))
                .collect::<std::result::Result<Vec<T>, String>>()
                .map(Some)
                .map_err(|message| HarnessError::Parse { line: *line, message: format!("{key}: {message}") }),
        }
    }

    /// The experiment kind named in the file, if any.
    pub fn kind(&self) -> Result<Option<ExperimentKind>> {
        self.scalar("kind", |s| s.parse())
    }

    /// Expands the entries into validated experiment cells. `kind` is used
    /// when the file does not name one; a conflicting file entry is an
    /// error.
    pub fn expand(&self, kind: ExperimentKind) -> Result<Vec<ExperimentConfig>> {
        if let Some(k) = self.kind()? {
            if k != kind {
                return Err(HarnessError::Config(format!("configuration is for `{k}`, not `{kind}`")));
            }
        }
        let mut base = ExperimentConfig::new(kind);
        if let Some(v) = self.scalar("replicates", parse_count)? {
            base.replicates = v;
        }
        if let Some(v) = self.scalar("seed", parse_count)? {
            base.seed = v;
        }
        base.rho = self.scalar("rho", parse_real)?;
        base.n_level = self.scalar("n_level", parse_count)?;
        base.nu_init = self.scalar("nu_init", parse_real)?;
        base.lambda = self.scalar("lambda", parse_real)?;
        base.t_max = self.scalar("t_max", parse_count)?.map(|v| v as usize);
        base.ce_pilot = self.scalar("ce_pilot", parse_count)?.map(|v| v as usize);
        base.kappa = self.scalar("kappa", parse_real)?;
        base.threads = self.scalar("threads", parse_count)?.map(|v| v as usize);
        if let Some(v) = self.scalar("timings", parse_bool)? {
            base.timings = v;
        }
        if let Some(v) = self.scalar("trace_every", parse_count)? {
            base.trace_every = v;
        }
        base.out = self.scalar("out", |s| Ok(PathBuf::from(s)))?;
        if let Some(v) = self.scalar("format", |s| s.parse())? {
            base.format = v;
        }

        let models = self.list("model", |s| s.parse())?.unwrap_or_else(|| vec![base.model]);
        let estimators = self.list("estimator", |s| s.parse())?.unwrap_or_else(|| vec![base.estimator]);
        let gammas: Vec<Option<f64>> = match self.list("gamma", parse_real)? {
            Some(g) => g.into_iter().map(Some).collect(),
            None => vec![base.gamma],
        };
        let budgets = self.list("n", parse_count)?.unwrap_or_else(|| vec![base.n]);
        let particles = self.list("particles", parse_count)?;
        let steps = self.list("mcmc_steps", parse_count)?;
        let nested: Vec<(usize, usize)> = match (particles, steps) {
            (None, None) => vec![(base.particles, base.mcmc_steps)],
            (Some(p), None) => p.into_iter().map(|p| (p as usize, base.mcmc_steps)).collect(),
            (None, Some(s)) => s.into_iter().map(|s| (base.particles, s as usize)).collect(),
            (Some(p), Some(s)) => {
                if p.len() != s.len() {
                    return Err(HarnessError::Config(
                        "particles and mcmc_steps lists must have equal length".to_string(),
                    ));
                }
                p.into_iter().zip(s).map(|(p, s)| (p as usize, s as usize)).collect()
            }
        };

        let mut cells = Vec::new();
        for &model in &models {
            for &gamma in &gammas {
                for &estimator in &estimators {
                    let settings: &[(usize, usize)] = if estimator == EstimatorKind::Ns {
                        &nested
                    } else {
                        &nested[..1]
                    };
                    for &(p, s) in settings {
                        for &n in &budgets {
                            let cell = ExperimentConfig {
                                model,
                                estimator,
                                gamma,
                                n,
                                particles: p,
                                mcmc_steps: s,
                                ..base.clone()
                            };
                            cell.validate()?;
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// Parses a nonnegative integer, allowing `1e6` and `_` separators.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let cleaned = s.trim().replace('_', "");
    if let Ok(v) = cleaned.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = cleaned.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9_007_199_254_740_992.0 {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

/// Parses a real number; `e^x` is accepted for powers of Euler's number.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("e^") {
        Some(exp) => exp.parse::<f64>().map(f64::exp),
        None => s.replace('_', "").parse::<f64>(),
    }
    .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("10_000"), Ok(10_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_real("e^-1"), Ok((-1f64).exp()));
    }

    #[test]
    fn file_entries_and_overrides() {
        let mut raw = RawConfig::parse("# comment\nestimator = cmc, ss\ngamma = 2\nn = 1e5 # inline\n").unwrap();
        raw.set("n-level", "500").unwrap();
        let cells = raw.expand(ExperimentKind::RareEvent).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].estimator, EstimatorKind::Cmc);
        assert_eq!(cells[1].n_level, Some(500));
        assert_eq!(cells[1].n, 100_000);
        assert_eq!(cells[0].truth(), Some(1.34e-5));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(RawConfig::parse("gamma 2"), Err(HarnessError::Parse { line: 1, .. })));
        assert!(matches!(RawConfig::parse("\nfoo = 1"), Err(HarnessError::Parse { line: 2, .. })));
        assert!(RawConfig::parse("n = 1\nn = 2").is_err());
        let raw = RawConfig::parse("gamma = abc").unwrap();
        assert!(raw.expand(ExperimentKind::RareEvent).is_err());
    }

    #[test]
    fn incompatible_estimators_are_rejected() {
        let ce = RawConfig::parse("estimator = ce\nmodel = centered").unwrap();
        assert!(ce.expand(ExperimentKind::RareEvent).is_err());
        let ns = RawConfig::parse("estimator = ns").unwrap();
        assert!(ns.expand(ExperimentKind::RareEvent).is_err());
        let cmc = RawConfig::parse("estimator = cmc").unwrap();
        assert!(cmc.expand(ExperimentKind::Evidence).is_err());
        let ce_budget = RawConfig::parse("estimator = ce\nn = 1000").unwrap();
        assert!(ce_budget.expand(ExperimentKind::RareEvent).is_err());
        let zero = RawConfig::parse("replicates = 0").unwrap();
        assert!(zero.expand(ExperimentKind::RareEvent).is_err());
        let kind = RawConfig::parse("kind = evidence").unwrap();
        assert!(kind.expand(ExperimentKind::RareEvent).is_err());
    }

    #[test]
    fn nested_settings_pair_up_and_only_multiply_ns() {
        let raw =
            RawConfig::parse("estimator = ns, ss, dns\nparticles = 300, 1000\nmcmc_steps = 333, 100\nmodel = decentered")
                .unwrap();
        let cells = raw.expand(ExperimentKind::Evidence).unwrap();
        let labels: Vec<String> = cells.iter().map(|c| c.estimator_label()).collect();
        assert_eq!(labels, ["ns(300,333)", "ns(1000,100)", "ss", "dns"]);
        let bad = RawConfig::parse("estimator = ns\nparticles = 300, 1000\nmcmc_steps = 333").unwrap();
        assert!(bad.expand(ExperimentKind::Evidence).is_err());
    }

    #[test]
    fn split_settings_follow_overrides() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Evidence);
        let ss = cfg.split_config();
        assert_eq!((ss.boost, ss.nu_init, ss.t_max), (10.0, 5000.0, 100));
        cfg.lambda = Some(0.5);
        cfg.t_max = Some(20);
        let ss = cfg.split_config();
        assert_eq!((ss.boost, ss.t_max, ss.gamma), (0.5, 20, None));
        let rare = ExperimentConfig::new(ExperimentKind::RareEvent).split_config();
        assert_eq!((rare.boost, rare.n_level, rare.gamma), (0.1, 10_000, Some(2.0)));
    }
}
