//! Dataset ingestion: counts CSV to compositions, label handling and the
//! prevalence/abundance feature filter.
//!
//! Input format: UTF-8 CSV with a header row, one sample per row, first
//! column the sample id, remaining columns numeric counts or relative
//! abundances (`.` decimal separator). An optional label column is named
//! explicitly. A transposed orientation (taxa as rows) is handled by the
//! `transpose` flag at load time. Missing cells are errors, never imputed.

use crate::compdata::Composition;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Prediction task of a labeled dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Regression,
    Classification,
}

/// Raw nonnegative counts with names, prior to normalization.
#[derive(Debug, Clone)]
pub struct CountsTable {
    pub counts: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    /// Raw label strings, when a label column was requested.
    pub labels: Option<Vec<String>>,
}

/// Normalized dataset: compositions plus an optional response.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Vec<Composition>,
    /// Regression targets, or +/-1 encoded class labels.
    pub y: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub task: Option<Task>,
    /// For classification: the label strings mapped to (-1, +1).
    pub label_names: Option<(String, String)>,
}

/// Read a counts CSV. When `label_column` is given, that column is split off
/// as the label; every other non-id column must be numeric and nonnegative.
pub fn read_counts_table(
    path: &Path,
    label_column: Option<&str>,
    transpose: bool,
) -> Result<CountsTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if headers.len() < 2 {
        return Err(Error::ParseError {
            line: 1,
            column: String::new(),
            message: "expected an id column plus at least one data column".to_string(),
        });
    }
    let mut row_ids = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::ParseError {
                line: ri + 2,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        row_ids.push(record[0].to_string());
        rows.push(record.iter().skip(1).map(String::from).collect());
    }
    let col_names: Vec<String> = headers[1..].to_vec();

    // After this block: samples are rows, `names` are feature columns.
    let (sample_ids, names, cells) = if transpose {
        if label_column.is_some() {
            return Err(Error::ParseError {
                line: 1,
                column: String::new(),
                message: "label column cannot be combined with --transpose; labels are per sample"
                    .to_string(),
            });
        }
        let flipped: Vec<Vec<String>> = (0..col_names.len())
            .map(|j| rows.iter().map(|r| r[j].clone()).collect())
            .collect();
        (col_names, row_ids, flipped)
    } else {
        (row_ids, col_names, rows)
    };

    let label_idx = match label_column {
        None => None,
        Some(name) => Some(
            names
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
    };

    let feature_names: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, n)| n.clone())
        .collect();
    {
        let mut sorted = feature_names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != feature_names.len() {
            return Err(Error::ParseError {
                line: 1,
                column: String::new(),
                message: "duplicate feature names in header".to_string(),
            });
        }
    }

    let mut counts = Vec::with_capacity(cells.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(cells.len()));
    for (ri, row) in cells.iter().enumerate() {
        let mut vals = Vec::with_capacity(feature_names.len());
        for (j, cell) in row.iter().enumerate() {
            if Some(j) == label_idx {
                labels.as_mut().unwrap().push(cell.clone());
                continue;
            }
            if cell.is_empty() {
                return Err(Error::ParseError {
                    line: ri + 2,
                    column: names[j].clone(),
                    message: "missing cell".to_string(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::ParseError {
                line: ri + 2,
                column: names[j].clone(),
                message: format!("invalid number {cell:?}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::ParseError {
                    line: ri + 2,
                    column: names[j].clone(),
                    message: format!("counts must be finite and >= 0, got {v}"),
                });
            }
            vals.push(v);
        }
        counts.push(vals);
    }
    Ok(CountsTable {
        counts,
        feature_names,
        sample_ids,
        labels,
    })
}

/// Features kept/dropped by [`prevalence_abundance_filter`].
#[derive(Debug, Clone)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

/// Keep features that are present (count > 0) in at least `prevalence_frac`
/// of the samples *and* whose median over non-zero counts is at least
/// `min_median_nonzero`. Defaults elsewhere in the crate are 0.25 and 5.
/// The filter is idempotent; renormalization happens downstream.
pub fn prevalence_abundance_filter(
    table: &CountsTable,
    prevalence_frac: f64,
    min_median_nonzero: f64,
) -> Result<(CountsTable, FilterReport)> {
    let n = table.counts.len();
    let p = table.feature_names.len();
    let mut keep = Vec::new();
    let mut report = FilterReport {
        kept: Vec::new(),
        dropped: Vec::new(),
    };
    for j in 0..p {
        let mut nonzero: Vec<f64> = (0..n)
            .map(|i| table.counts[i][j])
            .filter(|&v| v > 0.0)
            .collect();
        let prevalence = nonzero.len() as f64 / n as f64;
        nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if nonzero.is_empty() {
            0.0
        } else if nonzero.len() % 2 == 1 {
            nonzero[nonzero.len() / 2]
        } else {
            0.5 * (nonzero[nonzero.len() / 2 - 1] + nonzero[nonzero.len() / 2])
        };
        if prevalence >= prevalence_frac && median >= min_median_nonzero {
            keep.push(j);
            report.kept.push(table.feature_names[j].clone());
        } else {
            report.dropped.push(table.feature_names[j].clone());
        }
    }
    if keep.is_empty() {
        return Err(Error::AllFeaturesFiltered {
            prevalence: prevalence_frac,
            min_median: min_median_nonzero,
        });
    }
    let counts = table
        .counts
        .iter()
        .map(|row| keep.iter().map(|&j| row[j]).collect())
        .collect();
    Ok((
        CountsTable {
            counts,
            feature_names: report.kept.clone(),
            sample_ids: table.sample_ids.clone(),
            labels: table.labels.clone(),
        },
        report,
    ))
}

impl CountsTable {
    /// Normalize rows onto the simplex and parse labels for `task`.
    /// Zero-sum rows are rejected with their sample id.
    pub fn into_dataset(self, task: Option<Task>) -> Result<Dataset> {
        let mut x = Vec::with_capacity(self.counts.len());
        for (row, id) in self.counts.iter().zip(&self.sample_ids) {
            match Composition::from_counts(row) {
                Ok(c) => x.push(c),
                Err(Error::ZeroSumRow(_)) => return Err(Error::ZeroSumRow(id.clone())),
                Err(e) => return Err(e),
            }
        }
        let (y, label_names) = match (&self.labels, task) {
            (None, _) => (None, None),
            (Some(_), None) => {
                return Err(Error::ParseError {
                    line: 1,
                    column: String::new(),
                    message: "a label column was read but no task was given".to_string(),
                })
            }
            (Some(labels), Some(Task::Regression)) => {
                let mut y = Vec::with_capacity(labels.len());
                for (i, raw) in labels.iter().enumerate() {
                    y.push(raw.parse::<f64>().map_err(|_| Error::ParseError {
                        line: i + 2,
                        column: "label".to_string(),
                        message: format!("invalid numeric label {raw:?}"),
                    })?);
                }
                (Some(y), None)
            }
            (Some(labels), Some(Task::Classification)) => {
                let mut distinct: Vec<String> = labels.to_vec();
                distinct.sort();
                distinct.dedup();
                if distinct.len() != 2 {
                    return Err(Error::NonBinaryLabels(distinct));
                }
                let y = labels
                    .iter()
                    .map(|l| if *l == distinct[0] { -1.0 } else { 1.0 })
                    .collect();
                (Some(y), Some((distinct[0].clone(), distinct[1].clone())))
            }
        };
        Ok(Dataset {
            x,
            y,
            feature_names: self.feature_names,
            sample_ids: self.sample_ids,
            task,
            label_names,
        })
    }
}

/// One-step load: counts CSV -> normalized [`Dataset`].
pub fn load_counts_csv(path: &Path, label_column: Option<&str>, task: Option<Task>) -> Result<Dataset> {
    read_counts_table(path, label_column, false)?.into_dataset(task)
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn p(&self) -> usize {
        self.x.first().map_or(0, |c| c.len())
    }

    /// Write the normalized matrix (plus any response) back out in the input
    /// schema. Values round-trip bit-exactly through the shortest decimal
    /// representation.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        if self.y.is_some() {
            header.push("label".to_string());
        }
        writer.write_record(&header)?;
        for (i, comp) in self.x.iter().enumerate() {
            let mut row = vec![self.sample_ids[i].clone()];
            row.extend(comp.values().iter().map(|v| format!("{v}")));
            if let Some(y) = &self.y {
                match (&self.label_names, self.task) {
                    (Some((neg, pos)), Some(Task::Classification)) => {
                        row.push(if y[i] < 0.0 { neg.clone() } else { pos.clone() });
                    }
                    _ => row.push(format!("{}", y[i])),
                }
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}
