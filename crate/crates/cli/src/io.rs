//! CSV and JSON input/output.

use std::fs;
use std::path::Path;

use lowdim::sequential::{SmootherState, StateKind};
use serde::Serialize;

use crate::CliError;

/// Quantiles written to the percentile summary.
pub const PERCENTILES: [u32; 6] = [5, 25, 40, 60, 75, 95];

/// Reads one observation per row. A first row that does not parse as numbers
/// is taken as a header.
pub fn read_observations(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) if row.iter().all(|v| v.is_finite()) => rows.push(row),
            Ok(_) => return Err(CliError::Config(format!("{}:{line}: non-finite value", path.display()))),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Config(format!("{}:{line}: {e}", path.display()))),
        }
    }
    if let Some(d) = rows.first().map(Vec::len) {
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(CliError::Config(format!(
                "{}: row {} has {} columns, expected {d}",
                path.display(),
                bad + 1,
                rows[bad].len()
            )));
        }
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(io_error)?;
    w.write_record(header).map_err(io_error)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(io_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))? + "\n")?;
    Ok(())
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn state_names(prefix: usize, k: usize, n: usize) -> Vec<String> {
    if n == 1 {
        vec![format!("z_{}", prefix + k)]
    } else {
        (1..=n).map(|j| format!("z_{}_{j}", prefix + k)).collect()
    }
}

/// Column names of a smoothing sample. Fixed-point states carry `z_0` in
/// the parameter block.
pub fn smoothing_header(state: &SmootherState) -> Vec<String> {
    let (p, n) = (state.param_dim, state.state_dim);
    let times = state.steps.len() + 1;
    match state.kind {
        StateKind::Smoothing => {
            let mut h: Vec<String> = (1..=p).map(|j| format!("theta_{j}")).collect();
            h.extend((0..times).flat_map(|k| state_names(0, k, n)));
            h
        }
        StateKind::FixedPoint => {
            let mut h = state_names(0, 0, n);
            h.extend((0..times).flat_map(|k| state_names(1, k, n)));
            h
        }
    }
}

/// Column names of a filtering sample.
pub fn filtering_header(state: &SmootherState) -> Vec<String> {
    let full = smoothing_header(state);
    let p = state.param_dim;
    let mut h = full[..p].to_vec();
    h.extend_from_slice(&full[full.len() - state.state_dim..]);
    h
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One row per coordinate with the [`PERCENTILES`] of its samples.
pub fn percentile_table(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = samples.first().map_or(0, Vec::len);
    (0..dim)
        .map(|j| {
            let mut col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            col.sort_by(f64::total_cmp);
            PERCENTILES.iter().map(|&p| quantile(&col, p as f64 / 100.0)).collect()
        })
        .collect()
}

pub fn write_percentiles(path: &Path, names: &[String], samples: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(io_error)?;
    let mut header = vec!["coordinate".to_string()];
    header.extend(PERCENTILES.iter().map(|p| format!("p{p}")));
    w.write_record(&header).map_err(io_error)?;
    for (name, row) in names.iter().zip(percentile_table(samples)) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(io_error)?;
    }
    w.flush()?;
    Ok(())
}
