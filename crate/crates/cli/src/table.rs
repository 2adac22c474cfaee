//! CSV input and output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hyperfa::ObservationMatrix;

/// Label cells treated as missing.
const MISSING: [&str; 4] = ["", "NA", "na", "?"];

#[derive(Debug, Clone)]
pub struct Dataset {
    /// `id` column when present, else 1-based row numbers
    pub row_ids: Vec<String>,
    pub matrix: ObservationMatrix,
    /// raw label cells, `None` where missing
    pub labels: Option<Vec<Option<String>>>,
}

/// Reads a numeric CSV. The `id` column and `label_column` are kept as
/// text; every other cell must parse as a finite number.
pub fn read_dataset(path: &Path, label_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("{}: cannot read header row", path.display()))?
        .clone();
    let id_col = headers.iter().position(|h| h == "id");
    let label_col = headers.iter().position(|h| h == label_column);
    let numeric: Vec<usize> = (0..headers.len())
        .filter(|&j| Some(j) != id_col && Some(j) != label_col)
        .collect();
    if numeric.is_empty() {
        bail!("{}: no numeric columns", path.display());
    }

    let mut rows = Vec::new();
    let mut row_ids = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(i as u64 + 2, |p| p.line());
        let mut row = Vec::with_capacity(numeric.len());
        for &j in &numeric {
            let cell = &record[j];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => bail!(
                    "{}: row {}, column {} ('{}'): '{cell}' is not a finite number",
                    path.display(),
                    line,
                    j + 1,
                    &headers[j]
                ),
            }
        }
        rows.push(row);
        row_ids.push(id_col.map_or_else(|| (i + 1).to_string(), |j| record[j].to_string()));
        if let Some(j) = label_col {
            let cell = &record[j];
            labels.push((!MISSING.contains(&cell)).then(|| cell.to_string()));
        }
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let matrix = ObservationMatrix::from_rows(&rows).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(Dataset {
        row_ids,
        matrix,
        labels: label_col.map(|_| labels),
    })
}

/// Distinct label values in a stable order: numeric when every value is
/// an integer, lexicographic otherwise.
pub fn class_names<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: BTreeSet<&str> = values.collect();
    let mut names: Vec<String> = set.into_iter().map(str::to_string).collect();
    if names.iter().all(|s| s.parse::<i64>().is_ok()) {
        names.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    names
}

/// Two text columns read from a label file.
#[derive(Debug, Clone)]
pub struct LabelFile {
    pub row_ids: Option<Vec<String>>,
    pub labels: Vec<String>,
}

/// Reads `row_id` (or `id`) and the first of `label`, `component`,
/// `class`; a single-column file is read as labels.
pub fn read_labels(path: &Path) -> Result<LabelFile> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let find = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h == *n));
    let id_col = find(&["row_id", "id"]);
    let label_col = match find(&["label", "component", "class"]) {
        Some(j) => j,
        None if headers.len() == 1 => 0,
        None => bail!("{}: no label, component or class column", path.display()),
    };
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        if let Some(j) = id_col {
            ids.push(record[j].to_string());
        }
        labels.push(record[label_col].to_string());
    }
    Ok(LabelFile {
        row_ids: id_col.map(|_| ids),
        labels,
    })
}

/// `row_id,<name>,responsibility` rows.
pub fn assignment_csv<'a>(
    name: &str,
    rows: impl Iterator<Item = (&'a str, String, f64)>,
) -> String {
    let mut out = format!("row_id,{name},responsibility\n");
    for (id, label, r) in rows {
        let _ = writeln!(out, "{},{label},{r}", quote(id));
    }
    out
}

pub fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}
