//! CSV datasets: a header row, comma separated, one integer label column.

use std::path::Path;

use dputil_core::dataset::Dataset;
use dputil_core::numkit::Matrix;

use crate::error::{csv_err, io_err, HarnessError, Result};

/// Reads `path`, taking `label_column` as the class label and every other
/// column as a real-valued feature. Feature bounds are the observed ranges.
pub fn load_csv(path: &Path, label_column: &str, class_count: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let label_idx = headers.iter().position(|h| h == label_column).ok_or_else(|| HarnessError::Ingest {
        path: path.into(),
        line: 1,
        column: label_column.into(),
        reason: "label column not found in header".into(),
    })?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(HarnessError::Ingest {
            path: path.into(),
            line: 1,
            column: label_column.into(),
            reason: "no feature columns".into(),
        });
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |column: &str, reason: String| HarnessError::Ingest {
            path: path.into(),
            line,
            column: column.into(),
            reason,
        };
        for (j, cell) in record.iter().enumerate() {
            let column = &headers[j];
            let cell = cell.trim();
            if j == label_idx {
                let y: usize = cell
                    .parse()
                    .map_err(|_| bad(column, format!("label `{cell}` is not a non-negative integer")))?;
                if y >= class_count {
                    return Err(bad(column, format!("label {y} outside [0, {class_count})")));
                }
                labels.push(y);
            } else {
                let v: f64 = cell.parse().map_err(|_| bad(column, format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(bad(column, format!("`{cell}` is not finite")));
                }
                values.push(v);
            }
        }
    }
    let name = path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    let features = Matrix::from_vec(labels.len(), d, values)?;
    Ok(Dataset::new(name, features, labels, class_count)?)
}

/// Writes features as `x0..x{d-1}` followed by `label_column`, with
/// round-trip float formatting.
pub fn write_csv(data: &Dataset, path: &Path, label_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    header.push(label_column.into());
    writer.write_record(&header).map_err(csv_err(path))?;
    for (row, y) in data.features().iter_rows().zip(data.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(y.to_string());
        writer.write_record(&fields).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}
