use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::TrainConfig;
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::metrics::{MetricKind, MetricSet};
use crate::preprocess::AugmentationConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const ENSEMBLE_ID: &str = "ensemble";

/// Mean and sample standard deviation (n − 1 denominator) over the
/// iterations where a metric was defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Iterations where the metric was undefined and therefore excluded.
    pub excluded: usize,
    pub values: Vec<Option<f64>>,
}

pub fn summarize(values: &[Option<f64>]) -> MetricSummary {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let n = defined.len();
    let mean = (n > 0).then(|| defined.iter().sum::<f64>() / n as f64);
    let std = mean.map(|m| {
        if n < 2 {
            0.0
        } else {
            (defined.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    });
    MetricSummary {
        mean,
        std,
        excluded: values.len() - n,
        values: values.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_id: String,
    pub accuracy: MetricSummary,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub f1: MetricSummary,
    pub auc: MetricSummary,
}

impl ReportRow {
    pub fn from_iterations(model_id: &str, sets: &[MetricSet]) -> Self {
        let col = |k: MetricKind| summarize(&sets.iter().map(|s| s.get(k)).collect::<Vec<_>>());
        Self {
            model_id: model_id.to_string(),
            accuracy: col(MetricKind::Accuracy),
            sensitivity: col(MetricKind::Sensitivity),
            specificity: col(MetricKind::Specificity),
            f1: col(MetricKind::F1),
            auc: col(MetricKind::Auc),
        }
    }

    pub fn get(&self, kind: MetricKind) -> &MetricSummary {
        match kind {
            MetricKind::Accuracy => &self.accuracy,
            MetricKind::Sensitivity => &self.sensitivity,
            MetricKind::Specificity => &self.specificity,
            MetricKind::F1 => &self.f1,
            MetricKind::Auc => &self.auc,
        }
    }

    /// True when every summary matches `other` bit for bit.
    pub fn same_values(&self, other: &ReportRow) -> bool {
        MetricKind::ALL.iter().all(|&k| {
            let (a, b) = (self.get(k), other.get(k));
            let bits =
                |v: &[Option<f64>]| v.iter().map(|x| x.map(f64::to_bits)).collect::<Vec<_>>();
            bits(&a.values) == bits(&b.values)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunSource {
    Internal,
    External,
}

/// Settings echoed into the report for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub source: RunSource,
    pub seed: u64,
    pub train_fraction: f64,
    pub committee: Vec<String>,
    pub augmentation: Option<AugmentationConfig>,
    pub training: Option<TrainConfig>,
    pub input_side: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub iterations: usize,
    pub positive_label: ClassLabel,
    pub config: ConfigEcho,
    /// Committee members in committee order, then the ensemble row.
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, model_id: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }

    pub fn ensemble(&self) -> &ReportRow {
        self.row(ENSEMBLE_ID)
            .expect("reports always carry an ensemble row")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvalReport = serde_json::from_str(text)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported report schema {}",
                r.schema_version
            )));
        }
        Ok(r)
    }
}

fn cell(kind: MetricKind, s: &MetricSummary) -> String {
    let (scale, flag) = (
        if kind.is_percent() { 100.0 } else { 1.0 },
        if s.excluded > 0 { "*" } else { "" },
    );
    match (s.mean, s.std) {
        (Some(m), Some(sd)) => format!("{:.2} ± {:.2}{flag}", m * scale, sd * scale),
        _ => format!("n/a{flag}"),
    }
}

/// Plain-text table: one row per model plus the ensemble, each cell
/// `mean ± std`. Accuracy, sensitivity and specificity are percentages; F1
/// and AUC are fractions. Cells with excluded iterations carry `*` and a
/// footnote.
pub fn render_table(report: &EvalReport) -> String {
    let header: Vec<String> = std::iter::once("Model".to_string())
        .chain(MetricKind::ALL.iter().map(|k| k.title().to_string()))
        .collect();
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            std::iter::once(row.model_id.clone())
                .chain(MetricKind::ALL.iter().map(|&k| cell(k, row.get(k))))
                .collect()
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            std::iter::once(&header)
                .chain(&body)
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            s.push_str(c);
            s.extend(std::iter::repeat(' ').take(pad));
        }
        s.trim_end().to_string() + "\n"
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)) + "\n";

    let mut out = String::new();
    out += &line(&header);
    out += &rule;
    for (i, r) in body.iter().enumerate() {
        if report.rows[i].model_id == ENSEMBLE_ID {
            out += &rule;
        }
        out += &line(r);
    }

    let mut notes = String::new();
    for row in &report.rows {
        for k in MetricKind::ALL {
            let s = row.get(k);
            if s.excluded > 0 {
                let _ = writeln!(
                    notes,
                    "* {}: {} undefined in {} of {} iterations; statistics use the remaining {}.",
                    row.model_id,
                    k.title(),
                    s.excluded,
                    s.values.len(),
                    s.values.len() - s.excluded
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "\n{} iteration(s), train fraction {}, positive class {}, source {}.",
        report.iterations,
        report.config.train_fraction,
        report.positive_label,
        match report.config.source {
            RunSource::Internal => "internal",
            RunSource::External => "external",
        }
    );
    if !notes.is_empty() {
        out.push('\n');
        out += &notes;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Table,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Table => "txt",
        }
    }
}

/// Writes `report` to `path` in the given format.
pub fn emit_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Table => render_table(report),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `report.json` and `report.txt` under `dir`, returning their paths.
pub fn write_report_files(report: &EvalReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    let table = dir.join("report.txt");
    emit_report(report, ReportFormat::Json, &json)?;
    emit_report(report, ReportFormat::Table, &table)?;
    Ok((json, table))
}
