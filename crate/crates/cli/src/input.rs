//! Measurement CSV ingestion.
//!
//! Header: `timestamp_ms,value[,cell_id][,carrier][,location]`. Rows of each
//! `cell_id` become one series; without that column the whole file is one
//! series named after `--cell-id` or the file stem.

use std::path::Path;

use qoc_core::{MetricKind, Sample, TimeSeries};

use crate::CliError;

const REQUIRED: [&str; 2] = ["timestamp_ms", "value"];
const OPTIONAL: [&str; 3] = ["cell_id", "carrier", "location"];

/// Reads every series of a measurement CSV, in order of first appearance.
pub fn read_series(
    path: &Path,
    metric: MetricKind,
    cell_id: Option<&str>,
    interval_ms: Option<u64>,
) -> Result<Vec<TimeSeries>, CliError> {
    let data = |msg: String| CliError::Data(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(e.to_string()))?;
    let header = reader.headers().map_err(|e| data(e.to_string()))?.clone();
    if header.len() < 2 || header.iter().take(2).ne(REQUIRED) {
        return Err(data(format!(
            "header must start with 'timestamp_ms,value', got '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    if let Some(extra) = header.iter().skip(2).find(|h| !OPTIONAL.contains(h)) {
        return Err(data(format!("unknown column '{extra}'")));
    }
    let cell_col = header.iter().position(|h| h == "cell_id");
    let default_id = cell_id
        .map(str::to_string)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "cell".into());

    let mut groups: Vec<(String, Vec<Sample>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| data(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |msg: String| data(format!("line {line}: {msg}"));
        let timestamp_ms: i64 = record[0]
            .parse()
            .map_err(|_| row_err(format!("invalid timestamp_ms '{}'", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| row_err(format!("invalid value '{}'", &record[1])))?;
        if !value.is_finite() || value < 0.0 {
            return Err(row_err(format!(
                "value must be finite and non-negative, got {value}"
            )));
        }
        let id = match (cell_id, cell_col) {
            (None, Some(col)) if !record[col].is_empty() => &record[col],
            _ => default_id.as_str(),
        };
        let sample = Sample::new(timestamp_ms, value);
        match groups.iter_mut().find(|(g, _)| g == id) {
            Some((_, samples)) => samples.push(sample),
            None => groups.push((id.to_string(), vec![sample])),
        }
    }
    if groups.is_empty() {
        return Err(data("no measurement rows".into()));
    }
    groups
        .into_iter()
        .map(|(id, samples)| {
            TimeSeries::new(id.clone(), metric, samples, interval_ms)
                .map_err(|e| data(format!("series '{id}': {e}")))
        })
        .collect()
}

/// Writes a series as `timestamp_ms,value,cell_id`.
pub fn write_series(path: &Path, series: &TimeSeries) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    let write_err = |e: csv::Error| CliError::io(path, e);
    writer
        .write_record(["timestamp_ms", "value", "cell_id"])
        .map_err(write_err)?;
    for s in series.samples() {
        writer
            .write_record([
                &s.timestamp_ms.to_string(),
                &s.value.to_string(),
                series.cell_id(),
            ])
            .map_err(write_err)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}
