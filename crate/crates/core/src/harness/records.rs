//! Prediction exchange files.
//!
//! Delimited text (comma or tab) with a header naming at least
//! `model_id,image_id,decision,score` and optionally `iteration`, or JSON
//! lines (`.jsonl` / `.ndjson`) with the same keys. A record without an
//! iteration applies to every split iteration.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{ClassLabel, LabelSpace};

use super::manifest::{column_indices, csv_error, delimited_reader, parse_label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub model_id: String,
    pub image_id: String,
    pub decision: ClassLabel,
    /// Posterior probability of `decision`.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
}

fn validate(rec: &PredictionRecord, space: LabelSpace, at: &dyn Fn() -> String) -> Result<()> {
    if rec.model_id.is_empty() || rec.image_id.is_empty() {
        return Err(Error::Parse {
            path: at().into(),
            line: 0,
            message: "empty model_id or image_id".into(),
        });
    }
    if !(0.0..=1.0).contains(&rec.score) {
        return Err(Error::Domain(format!(
            "{}: score {} for model `{}`, image `{}` is outside [0, 1]",
            at(),
            rec.score,
            rec.model_id,
            rec.image_id
        )));
    }
    if !space.contains(rec.decision) {
        return Err(Error::InvalidLabel(format!(
            "{}: decision {} for model `{}`, image `{}` is not in the {space} label space",
            at(),
            rec.decision,
            rec.model_id,
            rec.image_id
        )));
    }
    Ok(())
}

fn is_json_lines(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

/// Reads one prediction file, rejecting out-of-range scores, unknown labels,
/// and repeated `(iteration, model_id, image_id)` keys.
pub fn read_predictions(path: &Path, space: LabelSpace) -> Result<Vec<PredictionRecord>> {
    let records = if is_json_lines(path) {
        read_json_lines(path, space)?
    } else {
        read_delimited(path, space)?
    };
    check_unique(&records, &path.display().to_string())?;
    Ok(records)
}

fn read_delimited(path: &Path, space: LabelSpace) -> Result<Vec<PredictionRecord>> {
    let mut reader = delimited_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let [model_col, image_col, decision_col, score_col] = column_indices(
        path,
        &headers,
        ["model_id", "image_id", "decision", "score"],
    )?;
    let iter_col = headers.iter().position(|h| h == "iteration");

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let raw_score = &record[score_col];
        let score = raw_score
            .parse::<f64>()
            .map_err(|_| parse_err(format!("score `{raw_score}` is not a number")))?;
        let iteration = match iter_col.map(|c| &record[c]) {
            None | Some("") => None,
            Some(raw) => Some(raw.parse::<usize>().map_err(|_| {
                parse_err(format!("iteration `{raw}` is not a nonnegative integer"))
            })?),
        };
        let rec = PredictionRecord {
            model_id: record[model_col].to_string(),
            image_id: record[image_col].to_string(),
            decision: parse_label(path, line, &record[decision_col], space)?,
            score,
            iteration,
        };
        validate(&rec, space, &|| format!("{}:{line}", path.display()))?;
        out.push(rec);
    }
    Ok(out)
}

fn read_json_lines(path: &Path, space: LabelSpace) -> Result<Vec<PredictionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let number = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: number,
            message: e.to_string(),
        })?;
        validate(&rec, space, &|| format!("{}:{number}", path.display()))?;
        out.push(rec);
    }
    Ok(out)
}

fn check_unique(records: &[PredictionRecord], origin: &str) -> Result<()> {
    let mut seen = HashMap::with_capacity(records.len());
    for r in records {
        if seen
            .insert((r.iteration, r.model_id.as_str(), r.image_id.as_str()), ())
            .is_some()
        {
            return Err(Error::DuplicateId(format!(
                "prediction for model {}, image {}{} repeated in {origin}",
                r.model_id,
                r.image_id,
                r.iteration
                    .map(|i| format!(", iteration {i}"))
                    .unwrap_or_default()
            )));
        }
    }
    Ok(())
}

/// Writes records as comma-separated text. Scores use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let with_iteration = records.iter().any(|r| r.iteration.is_some());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    if is_json_lines(path) {
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w).map_err(io)?;
        }
    } else {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["model_id", "image_id", "decision", "score"];
        if with_iteration {
            header.push("iteration");
        }
        csv.write_record(&header).map_err(|e| csv_error(path, e))?;
        for r in records {
            let mut row = vec![
                r.model_id.clone(),
                r.image_id.clone(),
                r.decision.to_string(),
                r.score.to_string(),
            ];
            if with_iteration {
                row.push(r.iteration.map(|i| i.to_string()).unwrap_or_default());
            }
            csv.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w = csv
            .into_inner()
            .map_err(|e| Error::io(path, e.into_error()))?;
    }
    w.flush().map_err(io)
}

/// Prediction records from one or more files, indexed for lookup.
#[derive(Debug, Clone, Default)]
pub struct PredictionTable {
    model_ids: Vec<String>,
    index: HashMap<(Option<usize>, String, String), (ClassLabel, f64)>,
}

impl PredictionTable {
    /// Model order is the order of first appearance.
    pub fn from_records(records: &[PredictionRecord]) -> Result<Self> {
        check_unique(records, "the merged prediction set")?;
        let mut table = Self::default();
        for r in records {
            if !table.model_ids.contains(&r.model_id) {
                table.model_ids.push(r.model_id.clone());
            }
            table.index.insert(
                (r.iteration, r.model_id.clone(), r.image_id.clone()),
                (r.decision, r.score),
            );
        }
        Ok(table)
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    /// Iteration-specific records take precedence over iteration-free ones.
    pub fn lookup(
        &self,
        iteration: usize,
        model_id: &str,
        image_id: &str,
    ) -> Option<(ClassLabel, f64)> {
        let key = |it| (it, model_id.to_string(), image_id.to_string());
        self.index
            .get(&key(Some(iteration)))
            .or_else(|| self.index.get(&key(None)))
            .copied()
    }
}
