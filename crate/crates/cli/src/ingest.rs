//! CSV ingestion: column selection, numeric parsing with line/column
//! diagnostics, label encoding.

use std::path::Path;

use c3l_core::DataMatrix;

use crate::CliError;

#[derive(Debug)]
pub struct Dataset {
    pub data: DataMatrix,
    pub feature_names: Vec<String>,
    pub labels: Option<Vec<usize>>,
    pub discriminant: Option<Vec<f64>>,
}

pub fn ingest(
    path: &Path,
    features: Option<&str>,
    labels_col: Option<&str>,
    discriminant_col: Option<&str>,
) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("bad header row: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let label_idx = match labels_col {
        Some(name) => Some(find_column(&headers, name)?),
        None => None,
    };
    let disc_idx = match discriminant_col {
        Some(name) => Some(find_column(&headers, name)?),
        None => None,
    };
    let feature_idx = match features {
        Some(spec) => parse_feature_selection(spec, &headers)?,
        None => (0..headers.len())
            .filter(|i| Some(*i) != label_idx && Some(*i) != disc_idx)
            .collect(),
    };
    if feature_idx.is_empty() {
        return Err(CliError::input("no feature columns selected"));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels_raw: Vec<String> = Vec::new();
    let mut discriminant: Vec<f64> = Vec::new();
    for (rec_no, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::input(format!("malformed CSV record {}: {e}", rec_no + 1)))?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| format!("record {}", rec_no + 1));
        let mut row = Vec::with_capacity(feature_idx.len());
        for &idx in &feature_idx {
            row.push(parse_cell(&record, idx, &headers, &line)?);
        }
        if let Some(idx) = disc_idx {
            discriminant.push(parse_cell(&record, idx, &headers, &line)?);
        }
        if let Some(idx) = label_idx {
            let cell = record.get(idx).unwrap_or("");
            labels_raw.push(cell.to_string());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input("input has no data rows"));
    }

    let data = DataMatrix::from_rows(&rows).map_err(CliError::Core)?;
    let labels = label_idx.map(|_| encode_labels(&labels_raw));
    Ok(Dataset {
        data,
        feature_names: feature_idx.iter().map(|&i| headers[i].clone()).collect(),
        labels,
        discriminant: disc_idx.map(|_| discriminant),
    })
}

fn parse_cell(
    record: &csv::StringRecord,
    idx: usize,
    headers: &[String],
    line: &str,
) -> Result<f64, CliError> {
    let name = &headers[idx];
    let cell = record
        .get(idx)
        .ok_or_else(|| CliError::input(format!("line {line}, column '{name}': missing value")))?;
    let value: f64 = cell.parse().map_err(|_| {
        CliError::input(format!(
            "line {line}, column '{name}': '{cell}' is not numeric"
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::input(format!(
            "line {line}, column '{name}': '{cell}' is not finite"
        )));
    }
    Ok(value)
}

fn find_column(headers: &[String], name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::input(format!("no column named '{name}'")))
}

/// Items are header names, zero-based indices, or inclusive index ranges
/// like "2-5"; names win over numeric interpretation.
fn parse_feature_selection(spec: &str, headers: &[String]) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(idx) = headers.iter().position(|h| h == item) {
            out.push(idx);
            continue;
        }
        if let Some((lo, hi)) = item.split_once('-') {
            if let (Ok(lo), Ok(hi)) = (lo.trim().parse::<usize>(), hi.trim().parse::<usize>()) {
                if lo > hi || hi >= headers.len() {
                    return Err(CliError::input(format!(
                        "feature range '{item}' is out of bounds for {} columns",
                        headers.len()
                    )));
                }
                out.extend(lo..=hi);
                continue;
            }
        }
        if let Ok(idx) = item.parse::<usize>() {
            if idx >= headers.len() {
                return Err(CliError::input(format!(
                    "feature index {idx} is out of bounds for {} columns",
                    headers.len()
                )));
            }
            out.push(idx);
            continue;
        }
        return Err(CliError::input(format!(
            "feature '{item}' is neither a column name, an index, nor a range"
        )));
    }
    let mut seen = vec![false; headers.len()];
    for &i in &out {
        if seen[i] {
            return Err(CliError::input(format!(
                "feature column '{}' selected twice",
                headers[i]
            )));
        }
        seen[i] = true;
    }
    Ok(out)
}

/// Encodes arbitrary label strings as dense integers in first-appearance
/// order.
fn encode_labels(raw: &[String]) -> Vec<usize> {
    let mut seen: Vec<&String> = Vec::new();
    raw.iter()
        .map(|l| match seen.iter().position(|s| *s == l) {
            Some(i) => i,
            None => {
                seen.push(l);
                seen.len() - 1
            }
        })
        .collect()
}
