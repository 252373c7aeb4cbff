//! Replicate reports, their summary statistics and file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use splitsample::split::SplitResult;

use crate::config::{ExperimentConfig, ExperimentKind, ModelKind, OutputFormat};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub seed: u64,
    pub estimate: Option<f64>,
    /// The estimator's error message when the replicate failed.
    pub error: Option<String>,
    pub evaluations: Option<u64>,
    pub levels: Option<usize>,
    pub seconds: Option<f64>,
}

/// All replicates of one experiment cell.
///
/// The stored configuration omits the thread count and output path, which
/// affect how a run executes but not what it computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub config: ExperimentConfig,
    pub estimator: String,
    pub gamma_or_mode: String,
    pub truth: Option<f64>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Error metric of a report: relative RMSE for tail probabilities, RMS of
/// `log Ẑ - log Z` for evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RelativeRmse,
    RmsLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub estimator: String,
    pub model: ModelKind,
    pub gamma_or_mode: String,
    pub n: u64,
    pub replicates: usize,
    pub failures: usize,
    pub mean_estimate: Option<f64>,
    pub truth: Option<f64>,
    pub metric: Metric,
    pub error: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    estimator: &'a str,
    model: ModelKind,
    gamma_or_mode: &'a str,
    #[serde(rename = "N")]
    n: u64,
    replicate: u64,
    estimate: Option<f64>,
    truth: Option<f64>,
    rel_error: Option<f64>,
}

const CSV_HEADER: [&str; 8] = ["estimator", "model", "gamma_or_mode", "N", "replicate", "estimate", "truth", "rel_error"];

impl ReplicateReport {
    pub fn new(cfg: &ExperimentConfig, replicates: Vec<ReplicateRecord>) -> Self {
        Self {
            config: ExperimentConfig {
                threads: None,
                out: None,
                ..cfg.clone()
            },
            estimator: cfg.estimator_label(),
            gamma_or_mode: cfg.gamma_or_mode(),
            truth: cfg.truth(),
            replicates,
        }
    }

    pub fn metric(&self) -> Metric {
        match self.config.kind {
            ExperimentKind::Evidence => Metric::RmsLog,
            _ => Metric::RelativeRmse,
        }
    }

    /// Estimates of the replicates that succeeded.
    pub fn estimates(&self) -> Vec<f64> {
        self.replicates.iter().filter_map(|r| r.estimate).collect()
    }

    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.estimate.is_none()).count()
    }

    /// `√(mean((Ẑ/Z - 1)²))` over successful replicates.
    pub fn relative_rmse(&self) -> Option<f64> {
        let z = self.truth?;
        rms(self.estimates().iter().map(|e| e / z - 1.0))
    }

    /// `√(mean((log Ẑ - log Z)²))` over successful replicates.
    pub fn rms_log_error(&self) -> Option<f64> {
        let lz = self.truth?.ln();
        rms(self.estimates().iter().map(|e| e.ln() - lz))
    }

    pub fn mean_estimate(&self) -> Option<f64> {
        let e = self.estimates();
        (!e.is_empty()).then(|| e.iter().sum::<f64>() / e.len() as f64)
    }

    pub fn summary(&self) -> Summary {
        let metric = self.metric();
        Summary {
            estimator: self.estimator.clone(),
            model: self.config.model,
            gamma_or_mode: self.gamma_or_mode.clone(),
            n: self.config.n,
            replicates: self.replicates.len(),
            failures: self.failures(),
            mean_estimate: self.mean_estimate(),
            truth: self.truth,
            metric,
            error: match metric {
                Metric::RelativeRmse => self.relative_rmse(),
                Metric::RmsLog => self.rms_log_error(),
            },
        }
    }
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        count += 1;
    }
    (count > 0).then(|| (sum / count as f64).sqrt())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

/// Writes per-replicate rows of several reports as one CSV table.
pub fn write_csv<W: Write>(reports: &[ReplicateReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for report in reports {
        for r in &report.replicates {
            w.serialize(CsvRow {
                estimator: &report.estimator,
                model: report.config.model,
                gamma_or_mode: &report.gamma_or_mode,
                n: report.config.n,
                replicate: r.replicate,
                estimate: r.estimate,
                truth: report.truth,
                rel_error: r.estimate.zip(report.truth).map(|(e, z)| e / z - 1.0),
            })?;
        }
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

/// Writes the full report structure as pretty-printed JSON.
pub fn write_json<W: Write>(reports: &[ReplicateReport], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, reports)?;
    out.write_all(b"\n").map_err(|e| HarnessError::io("<json>", e))?;
    Ok(())
}

/// Renders reports in the chosen format.
pub fn render(reports: &[ReplicateReport], format: OutputFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(reports, &mut buf)?,
        OutputFormat::Json => write_json(reports, &mut buf)?,
    }
    Ok(buf)
}

/// Writes one report to `path`.
pub fn emit_report(report: &ReplicateReport, format: OutputFormat, path: &Path) -> Result<()> {
    emit_reports(std::slice::from_ref(report), format, path)
}

pub fn emit_reports(reports: &[ReplicateReport], format: OutputFormat, path: &Path) -> Result<()> {
    let bytes = render(reports, format)?;
    let mut f = create(path)?;
    f.write_all(&bytes).and_then(|_| f.flush()).map_err(|e| HarnessError::io(path, e))
}

/// Reads reports written by [`write_json`].
pub fn read_json(path: &Path) -> Result<Vec<ReplicateReport>> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Error metrics pivoted into a table: one row per threshold-or-mode,
/// model and estimator (in order of first appearance) and one column per
/// budget `N` (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub budgets: Vec<u64>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub gamma_or_mode: String,
    pub model: ModelKind,
    pub estimator: String,
    pub metric: Metric,
    pub cells: Vec<Option<f64>>,
}

impl SummaryTable {
    pub fn from_reports(reports: &[ReplicateReport]) -> Self {
        let mut budgets: Vec<u64> = reports.iter().map(|r| r.config.n).collect();
        budgets.sort_unstable();
        budgets.dedup();
        let mut rows: Vec<SummaryRow> = Vec::new();
        for report in reports {
            let s = report.summary();
            let col = budgets.binary_search(&s.n).expect("budget collected above");
            let pos = rows
                .iter()
                .position(|r| r.gamma_or_mode == s.gamma_or_mode && r.model == s.model && r.estimator == s.estimator);
            let row = match pos {
                Some(i) => &mut rows[i],
                None => {
                    rows.push(SummaryRow {
                        gamma_or_mode: s.gamma_or_mode.clone(),
                        model: s.model,
                        estimator: s.estimator.clone(),
                        metric: s.metric,
                        cells: vec![None; budgets.len()],
                    });
                    rows.last_mut().expect("just pushed")
                }
            };
            row.cells[col] = s.error;
        }
        Self { budgets, rows }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["gamma_or_mode".to_string(), "model".into(), "estimator".into(), "metric".into()];
        header.extend(self.budgets.iter().map(|n| format!("N={n}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let metric = match row.metric {
                Metric::RelativeRmse => "relative_rmse",
                Metric::RmsLog => "rms_log",
            };
            let mut rec = vec![row.gamma_or_mode.clone(), row.model.to_string(), row.estimator.clone(), metric.into()];
            rec.extend(row.cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
        Ok(())
    }
}

/// Writes the level-visit trace as `(iteration, level, log_Omega)` rows.
pub fn write_trace<W: Write>(res: &SplitResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "level", "log_Omega"])?;
    for p in &res.trace {
        w.write_record([p.iteration.to_string(), p.level.to_string(), p.log_omega.to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

/// Writes the final level grid as `(level, m, log_Omega, z_hat)` rows.
pub fn write_levels<W: Write>(res: &SplitResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "m", "log_Omega", "z_hat"])?;
    let g = &res.grid;
    for t in 0..g.len() {
        w.write_record([
            t.to_string(),
            g.thresholds()[t].to_string(),
            g.log_omega()[t].to_string(),
            g.z_hat()[t].to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}
